#include "coagprofile/operator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <limits>
#include <vector>

#include "coagprofile/quadrature.hpp"

namespace coagprofile {
namespace {

constexpr double kLn2 = 0.6931471805599453;
/// -ln(u) at the switch between direct table lookups for the inner window
/// (zeta(y; x), x) and its expansion about x. Below u ~ 1e-4 the primitive
/// differences inside a cell cancel to noise, while the quadratic expansion
/// remainder is ~(u m)^2 of scale.
constexpr double kWindowSwitch = 9.210340371976184;  // ln(1e4)

/// z = zeta(y; x): the curve e^{(y-x)/rho} + e^{(z-x)/rho} = 1 solved for z;
/// -infinity when y >= x. An involution in its first argument.
double zeta_curve(double y, double x, double rho) {
  const double u = std::exp((y - x) / rho);
  if (u >= 1.0) return -std::numeric_limits<double>::infinity();
  return x + rho * std::log1p(-u);
}

/// Node-aligned prefix/suffix sums of integral e^{-kappa x} h(x) dx with the
/// per-cell contributions kept (direct range sums over few cells avoid the
/// cancellation of prefix differences). Suffixes include the analytic tail
/// beyond x_max and are omitted for weights that diverge against it.
struct MomentTable {
  double kappa = 0.0;
  bool with_suffix = true;
  std::vector<ScaledReal> cell_vals;  ///< per cell
  std::vector<ScaledReal> prefix;     ///< per node, from x_min
  std::vector<ScaledReal> suffix;     ///< per node, to +infinity
};

MomentTable build_table(const ProfileInterpolant& f, double kappa, bool with_suffix) {
  const Grid& grid = f.grid();
  const std::size_t n = grid.size();
  const auto& cells = grid.cells();

  MomentTable t;
  t.kappa = kappa;
  t.with_suffix = with_suffix;
  t.cell_vals.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c)
    t.cell_vals[c] = f.cell_exp_moment_scaled(c, kappa);

  t.prefix.assign(n, ScaledReal::zero());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    // The doubled node shares its coordinate: carry the sum across the pair.
    if (cell.i0 == grid.jump_right_index())
      t.prefix[cell.i0] = t.prefix[grid.jump_left_index()];
    t.prefix[cell.i1] = t.prefix[cell.i0] + t.cell_vals[c];
  }

  if (with_suffix) {
    t.suffix.assign(n, ScaledReal::zero());
    ScaledReal tail = ScaledReal::zero();
    const double rate = f.right_tail_rate();
    if (f.right_tail_value() != 0.0 && rate + kappa > 0.0) {
      tail = ScaledReal::from_double(f.right_tail_value() / (rate + kappa)) *
             ScaledReal::from_exp(-kappa * grid.x_max());
    }
    t.suffix[n - 1] = tail;
    for (std::size_t c = cells.size(); c-- > 0;) {
      const auto& cell = cells[c];
      t.suffix[cell.i0] = t.suffix[cell.i1] + t.cell_vals[c];
      if (cell.i0 == grid.jump_right_index())
        t.suffix[grid.jump_left_index()] = t.suffix[cell.i0];
    }
  }
  return t;
}

/// Local decay-rate estimate from the last nodes; falls back when values are
/// missing, mixed-sign, or imply an implausible rate.
double fit_tail_rate(const Grid& grid, const std::vector<double>& v, double fallback) {
  const std::size_t n = grid.size();
  if (n < 10) return fallback;
  const std::size_t i1 = n - 1, i0 = n - 8;
  if (v[i0] == 0.0 || v[i1] == 0.0) return fallback;
  if ((v[i0] > 0.0) != (v[i1] > 0.0)) return fallback;
  const double dx = grid.node(i1) - grid.node(i0);
  if (dx <= 0.0) return fallback;
  const double rate = (std::log(std::abs(v[i0])) - std::log(std::abs(v[i1]))) / dx;
  if (!std::isfinite(rate) || rate < 0.2 || rate > 3.0) return fallback;
  return rate;
}

/// One application of the profile map. The separable weighted kernel
/// e^{-(a/rho) z} K(e^{(y-z)/rho}, 1) = e^{-alpha y} + e^{y/rho} e^{-beta z}
/// turns every inner integral into range lookups in five moment tables of h.
class MapEngine {
 public:
  MapEngine(const HomogeneousKernel& kernel, const GridFunction& h)
      : grid_(h.grid()),
        interp_(h),
        a_(kernel.a()),
        rho_(grid_.weight().rho),
        alpha_(a_ / rho_),
        beta_((1.0 + a_) / rho_),
        big_l_(grid_.weight().L),
        lrho_(grid_.weight().L * grid_.weight().rho),
        n_(grid_.size()),
        jl_(grid_.jump_left_index()),
        jr_(grid_.jump_right_index()) {
    mass_t_ = build_table(interp_, 0.0, true);
    gamma_t_ = build_table(interp_, alpha_, true);
    heavy_t_ = build_table(interp_, beta_, true);
    // e^{+y/rho} h and e^{+(1-a) y/rho} h grow faster than any admissible
    // tail decays: prefix only.
    grow_t_ = build_table(interp_, -1.0 / rho_, false);
    half_t_ = build_table(interp_, (a_ - 1.0) / rho_, false);
    // Higher members of the same two ladders, e^{(k-a) y/rho} h and
    // e^{k y/rho} h, carry the u^2 and u^3 terms of the thin-window series
    // (u = e^{(y-x)/rho}) so those regimes collapse onto table ranges.
    half2_t_ = build_table(interp_, (a_ - 2.0) / rho_, false);
    half3_t_ = build_table(interp_, (a_ - 3.0) / rho_, false);
    grow2_t_ = build_table(interp_, -2.0 / rho_, false);
    grow3_t_ = build_table(interp_, -3.0 / rho_, false);
    grow4_t_ = build_table(interp_, -4.0 / rho_, false);

    mass_total_ = mass_t_.suffix.front().to_double();
    heavy_total_ = heavy_t_.suffix.front();
    heavy_total_dbl_ = heavy_total_.to_double();

    live_lo_ = n_;
    for (std::size_t i = 0; i < n_; ++i) {
      if (std::abs(h[i]) > 1e-290) {
        live_lo_ = i;
        break;
      }
    }
  }

  MapParts run() {
    MapParts parts{std::vector<double>(n_, 0.0), std::vector<double>(n_, 0.0),
                   std::vector<double>(n_, 0.0), std::vector<double>(n_, 0.0),
                   MapDiagnostics{}, GridFunction::zeros(grid_ptr(), 1.0)};

    for (std::size_t i = 0; i <= jl_; ++i) {
      parts.psi[i] = psi(grid_.node(i));
      parts.q[i] = q_at(grid_.node(i));
      parts.diag.q_max_dev = std::max(parts.diag.q_max_dev, std::abs(parts.q[i] - 1.0));
    }
    for (std::size_t i = 0; i <= jl_; ++i) parts.remainder[i] = remainder_left(i);
    for (std::size_t i = jr_; i < n_; ++i) parts.remainder[i] = remainder_right(i);

    GridFunction r_gf(grid_ptr(), parts.remainder,
                      fit_tail_rate(grid_, parts.remainder, 1.0 / (1.0 + rho_)));
    const ProfileInterpolant r_interp(r_gf);
    corrected_right(r_interp, parts.remainder, parts.corrected);
    corrected_left(r_interp, parts.remainder, parts.corrected);
    solve_constants(parts);

    std::vector<double> values(n_, 0.0);
    for (std::size_t i = 0; i <= jl_; ++i)
      values[i] = parts.diag.k1 * std::exp(-parts.psi[i]) + parts.corrected[i];
    for (std::size_t i = jr_; i < n_; ++i) {
      values[i] = parts.diag.k2 / (1.0 + rho_) *
                      std::exp(-(grid_.node(i) - lrho_) / (1.0 + rho_)) +
                  parts.corrected[i];
    }
    parts.diag.jump = values[jr_] - values[jl_];
    const double out_rate = fit_tail_rate(grid_, values, 1.0 / (1.0 + rho_));
    parts.result = GridFunction(grid_ptr(), std::move(values), out_rate);
    return parts;
  }

 private:
  std::shared_ptr<const Grid> grid_ptr() const { return interp_.grid_ptr(); }

  // ---- closed-form cumulative of the weighted pair rate ----

  /// psi(x) = (1/rho) int_x^{L rho} e^{-alpha y} Q(y) dy with
  /// Q(y) = mass_total + e^{beta y} heavy_total; both terms positive,
  /// evaluated cancellation-free through expm1.
  double psi(double x) const {
    if (x >= lrho_) return 0.0;
    const double term1 = mass_total_ / a_ * std::exp(-a_ * big_l_) *
                         std::expm1(alpha_ * (lrho_ - x));
    const double term2 =
        -heavy_total_dbl_ * std::exp(big_l_) * std::expm1((x - lrho_) / rho_);
    return term1 + term2;
  }

  /// psi(xi) - psi(xi + delta) >= 0 for 0 <= delta, xi + delta <= L rho.
  double psi_drop(double xi, double delta) const {
    const double y = xi + delta;
    const double term1 = mass_total_ / a_ * std::exp(-a_ * big_l_) *
                         std::exp(alpha_ * (lrho_ - y)) * std::expm1(alpha_ * delta);
    const double term2 =
        heavy_total_dbl_ * std::exp(xi / rho_) * std::expm1(delta / rho_);
    return term1 + term2;
  }

  /// |psi'(y)| = (1/rho) e^{-alpha y} Q(y).
  double psi_slope_abs(double y) const {
    return (std::exp(-alpha_ * y) * mass_total_ +
            (ScaledReal::from_exp(y / rho_) * heavy_total_).to_double()) /
           rho_;
  }

  double q_at(double y) const {
    return mass_total_ +
           (ScaledReal::from_exp(beta_ * y) * heavy_total_).to_double();
  }

  // ---- table lookups ----

  ScaledReal prefix_at(const MomentTable& t, double x) const {
    if (x <= grid_.x_min()) return ScaledReal::zero();
    if (x >= grid_.x_max()) return t.prefix.back();
    const std::size_t c = grid_.find_cell(x);
    const auto& cell = grid_.cells()[c];
    return t.prefix[cell.i0] +
           interp_.cell_exp_moment_partial_scaled(c, t.kappa, cell.x0, x);
  }

  ScaledReal suffix_at(const MomentTable& t, double x) const {
    if (x <= grid_.x_min()) return t.suffix.front();
    if (x >= grid_.x_max()) return t.suffix.back();
    const std::size_t c = grid_.find_cell(x);
    const auto& cell = grid_.cells()[c];
    return t.suffix[cell.i1] +
           interp_.cell_exp_moment_partial_scaled(c, t.kappa, x, cell.x1);
  }

  ScaledReal range_direct(const MomentTable& t, double lo, double hi) const {
    const std::size_t c_lo = grid_.find_cell(lo), c_hi = grid_.find_cell(hi);
    if (c_lo == c_hi)
      return interp_.cell_exp_moment_partial_scaled(c_lo, t.kappa, lo, hi);
    ScaledReal sum = interp_.cell_exp_moment_partial_scaled(c_lo, t.kappa, lo,
                                                            grid_.cells()[c_lo].x1);
    for (std::size_t c = c_lo + 1; c < c_hi; ++c) sum = sum + t.cell_vals[c];
    sum = sum + interp_.cell_exp_moment_partial_scaled(c_hi, t.kappa,
                                                       grid_.cells()[c_hi].x0, hi);
    return sum;
  }

  /// Integral of e^{-kappa z} h over [lo, hi] (clamped to the domain): direct
  /// cell sums when the range is short, otherwise the better-conditioned of
  /// the prefix/suffix differences.
  ScaledReal range_of(const MomentTable& t, double lo, double hi) const {
    lo = std::max(lo, grid_.x_min());
    hi = std::min(hi, grid_.x_max());
    if (hi <= lo) return ScaledReal::zero();
    const std::size_t c_lo = grid_.find_cell(lo), c_hi = grid_.find_cell(hi);
    if (c_hi - c_lo <= 64) return range_direct(t, lo, hi);
    if (!t.with_suffix) return prefix_at(t, hi) - prefix_at(t, lo);
    const ScaledReal p_lo = t.prefix[grid_.cells()[c_lo].i1];
    const ScaledReal s_hi = t.suffix[grid_.cells()[c_hi].i0];
    if (s_hi.compare_abs(p_lo) <= 0) return suffix_at(t, lo) - suffix_at(t, hi);
    return prefix_at(t, hi) - prefix_at(t, lo);
  }

  // ---- remainder ----

  /// Gauss-Legendre sum over [lo, hi], subdivided so the fastest exponential
  /// factor in the integrands (rate (2+a)/rho) varies by at most ~1.2 per
  /// panel; the profile's own variation per cell is bounded by mesh design
  /// exactly where its mass matters.
  template <typename F>
  double gl8_paneled(F&& f, double lo, double hi) const {
    if (hi <= lo) return 0.0;
    const double rate = (2.0 + a_) / rho_;
    const int nsub =
        std::clamp(static_cast<int>(std::ceil((hi - lo) * rate / 1.2)), 1, 24);
    double sum = 0.0;
    for (int k = 0; k < nsub; ++k) {
      const double p0 = lo + (hi - lo) * k / nsub;
      const double p1 = lo + (hi - lo) * (k + 1) / nsub;
      sum += gl8(f, p0, p1);
    }
    return sum;
  }

  /// Quadrature for one breakpoint gap: a single GL4 panel once the fastest
  /// exponential factor varies by at most ~0.6 across it (relative error
  /// below ~1e-11 even at that width, and typical gaps are far narrower),
  /// otherwise the paneled GL8.
  template <typename F>
  double gl_gap(F&& f, double lo, double hi) const {
    if ((hi - lo) * (2.0 + a_) <= 0.6 * rho_) return gl4(f, lo, hi);
    return gl8_paneled(f, lo, hi);
  }

  double live_lower() const {
    return live_lo_ == 0 ? grid_.x_min()
                         : grid_.node(std::min(live_lo_, n_ - 1) - 1);
  }

  /// Breakpoints for integrals whose integrand references h or the tables at
  /// zeta(.; x): mesh nodes plus the preimages of mesh nodes under the
  /// involution, restricted to [lo, hi]. zeta(.; x) is a decreasing
  /// involution of (-inf, x), so the nodes whose preimages land inside
  /// (lo, hi) are exactly those in (zeta(hi; x), zeta(lo; x)), and walking
  /// them downward yields the preimages already in ascending order.
  std::vector<double> zeta_breakpoints(double lo, double hi, double x) const {
    const auto& nodes = grid_.nodes();
    const double tol = 1e-13 * std::max(1.0, std::abs(x));
    const auto live = nodes.begin() + (live_lo_ == 0 ? 0 : live_lo_ - 1);
    const auto in_lo = std::upper_bound(live, nodes.end(), lo);
    const auto in_hi = std::lower_bound(in_lo, nodes.end(), hi);
    const auto w_lo = std::upper_bound(live, nodes.end(), zeta_curve(hi, x, rho_));
    const auto w_hi = std::lower_bound(w_lo, nodes.end(), zeta_curve(lo, x, rho_));
    std::vector<double> pres;
    pres.reserve(static_cast<std::size_t>(w_hi - w_lo));
    for (auto it = w_hi; it != w_lo;) {
      const double pre = zeta_curve(*--it, x, rho_);
      if (pre > lo && pre < hi) pres.push_back(pre);
    }
    std::vector<double> bp;
    bp.reserve(static_cast<std::size_t>(in_hi - in_lo) + pres.size() + 2);
    bp.push_back(lo);
    std::merge(in_lo, in_hi, pres.begin(), pres.end(), std::back_inserter(bp));
    bp.push_back(hi);
    bp.erase(std::unique(bp.begin(), bp.end(),
                         [tol](double p, double q) { return q - p < tol; }),
             bp.end());
    return bp;
  }

  /// Value and derivative of h at the right end of cell c (the limit from
  /// the left of the node that closes the cell).
  void cell_end_limits(std::size_t c, double* val, double* der) const {
    const auto& cell = grid_.cells()[c];
    const auto& poly = interp_.cell_poly(c);
    const double g1 = poly[0] + poly[1] + poly[2] + poly[3];
    const double gp1 = (poly[1] + 2.0 * poly[2] + 3.0 * poly[3]) / cell.width;
    const double w_end = std::exp(cell.omega0 + cell.omega_slope * cell.width);
    *val = g1 * w_end;
    *der = (cell.omega_slope * g1 + gp1) * w_end;
  }

  /// Left-limit of h at node i right of the jump (the cells vector skips the
  /// zero-width doubled pair, so the cell ending at that coordinate is i - 2).
  void left_limits(std::size_t i, double* val, double* der) const {
    cell_end_limits(i - 2, val, der);
  }

  /// Integral over [y0, y1] (with y1 <= x - rho ln(1e4)) of
  ///   h(y) [ e^{-alpha y} W_m(y) + e^{y/rho - beta x} W_h(y) ],
  /// where W_m, W_h are the window integrals of h and of e^{-beta(z-x)} h
  /// over (zeta(y; x), x), expanded about the left limit (hv, hd) of h at x
  /// through second order in the window width w = -rho log1p(-u):
  ///   W_m = w hv - w^2/2 hd,    W_h = w hv - w^2/2 (hd - beta hv).
  /// Substituting w = rho (u + u^2/2 + u^3/3) + O(u^4) and
  /// w^2 = rho^2 (u^2 + u^3) + O(u^4) turns each power of u = e^{(y-x)/rho}
  /// into a shifted-weight table range, so the whole deep sweep is six
  /// lookups. Truncation is O(u^4) relative to the leading term.
  double thin_window_series(double y0, double y1, double x, double hv,
                            double hd) const {
    if (!(y1 > y0)) return 0.0;
    const double hdm = hd;
    const double hdh = hd - beta_ * hv;
    const double cm[3] = {rho_ * hv, 0.5 * rho_ * (hv - rho_ * hdm),
                          rho_ * (hv / 3.0 - 0.5 * rho_ * hdm)};
    const double ch[3] = {rho_ * hv, 0.5 * rho_ * (hv - rho_ * hdh),
                          rho_ * (hv / 3.0 - 0.5 * rho_ * hdh)};
    const MomentTable* mass_tab[3] = {&half_t_, &half2_t_, &half3_t_};
    const MomentTable* heavy_tab[3] = {&grow2_t_, &grow3_t_, &grow4_t_};
    double sum = 0.0;
    for (int k = 1; k <= 3; ++k) {
      const double kx = k * x / rho_;
      sum += cm[k - 1] * (ScaledReal::from_exp(-kx) *
                          range_of(*mass_tab[k - 1], y0, y1))
                             .to_double();
      sum += ch[k - 1] * (ScaledReal::from_exp(-kx - beta_ * x) *
                          range_of(*heavy_tab[k - 1], y0, y1))
                             .to_double();
    }
    return sum;
  }

  /// R at a node left of the matching point:
  /// -(1/rho) int dy h(y) int_{x_min}^{zeta(y;x)} e^{-alpha z} K h(z) dz,
  /// assembled in four regimes of y like the right branch. Deep y, where
  /// zeta(y; x) hugs x, splits the prefixes as prefix(x) minus a thin window
  /// and collapses onto tables; y past the involution fixed point is
  /// substituted zz = zeta(y; x) (the preimages of deep nodes cluster
  /// unresolvably below x), and the deep-zz end of that strip collapses onto
  /// the tables by parts.
  double remainder_left(std::size_t i) {
    const double x = grid_.node(i);
    if (live_lo_ >= n_) return 0.0;
    if (x <= grid_.x_min() + rho_ * kLn2) return 0.0;
    const double y_lo = std::max(grid_.x_min(), live_lower());
    // The inner interval is nonempty for y < zeta(x_min; x) and meets the
    // live zone only for y < zeta(live edge; x).
    const double y_hi =
        std::min(zeta_curve(grid_.x_min(), x, rho_), zeta_curve(y_lo, x, rho_));
    if (!(y_hi > y_lo)) return 0.0;

    const double y_table = x - kWindowSwitch * rho_;
    const double y_sw = x - kLn2 * rho_;  // fixed point of zeta(.; x)
    double hv = 0.0, hd = 0.0;
    cell_end_limits(i - 1, &hv, &hd);  // left cells are index-aligned

    double sum = 0.0;

    // Deep y: prefix(zeta(y; x)) = prefix(x) - window; exact table products
    // for the prefix(x) part, the series for the window part.
    const double y_deep = std::min(y_hi, y_table);
    if (y_lo < y_deep) {
      sum += mass_t_.prefix[i].to_double() *
             range_of(gamma_t_, y_lo, y_deep).to_double();
      sum += (heavy_t_.prefix[i] * range_of(grow_t_, y_lo, y_deep)).to_double();
      sum -= thin_window_series(y_lo, y_deep, x, hv, hd);
    }

    // Resolved y below the fixed point: direct prefix lookups at zeta.
    const double a_lo = std::max(y_lo, y_table);
    const double a_hi = std::min(y_hi, y_sw);
    if (a_lo < a_hi) {
      auto f = [&](double y) {
        const double hy = interp_.h(y);
        if (hy == 0.0) return 0.0;
        const double zy = zeta_curve(y, x, rho_);
        const double mass_part =
            std::exp(-alpha_ * y) * prefix_at(mass_t_, zy).to_double();
        const double heavy_part =
            (ScaledReal::from_exp(y / rho_) * prefix_at(heavy_t_, zy)).to_double();
        return hy * (mass_part + heavy_part);
      };
      const auto bp = zeta_breakpoints(a_lo, a_hi, x);
      for (std::size_t s = 0; s + 1 < bp.size(); ++s)
        sum += gl_gap(f, bp[s], bp[s + 1]);
    }

    if (y_hi > y_sw) {
      // y past the fixed point, substituted zz = zeta(y; x): dy =
      // u/(1-u) dzz with u = e^{(zz-x)/rho}, and zeta(y_hi; x) = y_lo by the
      // involution. Resolved strip zz in (y_table, y_sw):
      const double s_lo = std::max(y_lo, y_table);
      if (s_lo < y_sw) {
        auto f_fold = [&](double zz) {
          const double u = std::exp((zz - x) / rho_);
          const double y = x + rho_ * std::log1p(-u);
          const double hy = interp_.h(y);
          if (hy == 0.0) return 0.0;
          const double mass_part =
              std::exp(-alpha_ * y) * prefix_at(mass_t_, zz).to_double();
          const double heavy_part =
              (ScaledReal::from_exp(y / rho_) * prefix_at(heavy_t_, zz)).to_double();
          return hy * u / (1.0 - u) * (mass_part + heavy_part);
        };
        const auto bp = zeta_breakpoints(s_lo, y_sw, x);
        for (std::size_t s = 0; s + 1 < bp.size(); ++s)
          sum += gl_gap(f_fold, bp[s], bp[s + 1]);
      }

      // Deep zz: h(y(zz)) = hv - w(u) hd + O(w^2) with the exact factors
      // e^{-alpha y} = e^{-alpha x}(1-u)^{-a}, e^{y/rho} = e^{x/rho}(1-u),
      // dy = u/(1-u) dzz. The u-series coefficients are
      //   mass:  u (1-u)^{-a-1} (hv - w hd) = hv u + ((a+1) hv - rho hd) u^2
      //          + ((a+1)(a+2)/2 hv - (a+3/2) rho hd) u^3 + O(u^4),
      //   heavy: u (hv - w hd) = hv u - rho hd (u^2 + u^3/2) + O(u^4),
      // and each integral of u^k times a prefix integrates by parts onto the
      // boundary values and one table range.
      if (y_lo < y_table) {
        const double dk[3] = {hv, (a_ + 1.0) * hv - rho_ * hd,
                              0.5 * (a_ + 1.0) * (a_ + 2.0) * hv -
                                  (a_ + 1.5) * rho_ * hd};
        const double ek[3] = {hv, -rho_ * hd, -0.5 * rho_ * hd};
        const MomentTable* gk[3] = {&grow_t_, &grow2_t_, &grow3_t_};
        const MomentTable* hk[3] = {&gamma_t_, &half_t_, &half2_t_};
        const double lo = y_lo, hi = y_table;
        const ScaledReal m_lo = prefix_at(mass_t_, lo), m_hi = prefix_at(mass_t_, hi);
        const ScaledReal h_lo = prefix_at(heavy_t_, lo), h_hi = prefix_at(heavy_t_, hi);
        const double e_ax = std::exp(-alpha_ * x);
        double mass_acc = 0.0, heavy_acc = 0.0;
        for (int k = 1; k <= 3; ++k) {
          const double rk = rho_ / k;
          const ScaledReal u_lo = ScaledReal::from_exp(k * (lo - x) / rho_);
          const ScaledReal u_hi = ScaledReal::from_exp(k * (hi - x) / rho_);
          const ScaledReal kx = ScaledReal::from_exp(-k * x / rho_);
          mass_acc += dk[k - 1] * rk *
                      (u_hi * m_hi - u_lo * m_lo - kx * range_of(*gk[k - 1], lo, hi))
                          .to_double();
          heavy_acc += ek[k - 1] * rk *
                       (ScaledReal::from_exp(x / rho_) *
                        (u_hi * h_hi - u_lo * h_lo - kx * range_of(*hk[k - 1], lo, hi)))
                           .to_double();
        }
        sum += e_ax * mass_acc + heavy_acc;
      }
    }
    return -sum / rho_;
  }

  /// R at a node right of the matching point. Two exact table products (the
  /// crossing fluxes) plus the double integral over the region between the
  /// curve zeta(.; x) and the vertical line at x, assembled in four regimes
  /// of y: a thin-window expansion, direct lookups, and - for y within
  /// rho ln 2 of x, where the window bottom sweeps the whole deep region
  /// inside an unresolvably thin sliver - the involution substitution
  /// zeta <-> y, whose deep part collapses onto the tables by parts.
  double remainder_right(std::size_t i) {
    const double x = grid_.node(i);
    const double r1 = -(gamma_t_.suffix[i] * mass_t_.suffix[i]).to_double() / rho_;
    const double r2 = (grow_t_.prefix[i] * heavy_t_.suffix[i]).to_double() / rho_;
    if (live_lo_ >= n_) return r1 + r2;
    const double y_lo = std::max(grid_.x_min(), live_lower());
    if (!(y_lo < x)) return r1 + r2;

    const double y_table = x - kWindowSwitch * rho_;
    const double y_sw = x - kLn2 * rho_;  // fixed point of zeta(.; x)
    double h_left = 0.0, hp_left = 0.0;
    left_limits(i, &h_left, &hp_left);

    double sum = 0.0;  // accumulates rho * (double-integral part)

    // Thin-window regime: the strip (zeta(y; x), x) has width w = O(rho u),
    // far below cell resolution; expand both range integrals about x and
    // collapse the sweep onto table ranges.
    if (y_lo < y_table) {
      sum += thin_window_series(y_lo, y_table, x, h_left, hp_left);
    }

    // Resolved-window regime, up to the involution fixed point.
    const double b_lo = std::max(y_lo, y_table);
    if (b_lo < y_sw) {
      auto f_direct = [&](double y) {
        const double hy = interp_.h(y);
        if (hy == 0.0) return 0.0;
        const double zy = zeta_curve(y, x, rho_);
        // Window (zeta, x) anchored at the node: one partial moment per
        // table instead of a cell sweep. The mass window rides a factor
        // e^{-alpha y} that crushes any cancellation residue; the heavy
        // window dominates its own suffix, so both differences are safe.
        const double mass_part =
            std::exp(-alpha_ * y) *
            (mass_t_.prefix[i] - prefix_at(mass_t_, zy)).to_double();
        const double heavy_part =
            (ScaledReal::from_exp(y / rho_) *
             (suffix_at(heavy_t_, zy) - heavy_t_.suffix[i]))
                .to_double();
        return hy * (mass_part + heavy_part);
      };
      const auto bp = zeta_breakpoints(b_lo, y_sw, x);
      for (std::size_t s = 0; s + 1 < bp.size(); ++s)
        sum += gl_gap(f_direct, bp[s], bp[s + 1]);
    }

    // Boundary layer y in (y_sw, x), substituted: dy = u/(1-u) dzeta with
    // u = e^{(zeta-x)/rho}, so the window bottom becomes zeta itself.
    // Resolved strip zeta in [y_table, y_sw]:
    {
      const auto t0 = tick();
      auto f_strip = [&](double zz) {
        const double u = std::exp((zz - x) / rho_);
        const double y = x + rho_ * std::log1p(-u);
        const double hy = interp_.h(y);
        if (hy == 0.0) return 0.0;
        // Same node-anchored windows as the resolved regime; the partial
        // lookups clamp at the domain edge, so the anchored identities stay
        // exact when zeta dips below x_min.
        const double mass_part =
            std::exp(-alpha_ * y) *
            (mass_t_.prefix[i] - prefix_at(mass_t_, zz)).to_double();
        const double heavy_part =
            (ScaledReal::from_exp(y / rho_) *
             (suffix_at(heavy_t_, zz) - heavy_t_.suffix[i]))
                .to_double();
        return hy * u / (1.0 - u) * (mass_part + heavy_part);
      };
      const auto bp = zeta_breakpoints(y_table, y_sw, x);
      for (std::size_t s = 0; s + 1 < bp.size(); ++s)
        sum += gl_gap(f_strip, bp[s], bp[s + 1]);
      acc(t_strip, t0, tick());
    }

    // Deep part zeta <= y_table (u <= 1e-4): with e^{y/rho} = e^{x/rho}(1-u)
    // and e^{-alpha y} = e^{-alpha x}(1-u)^{-a} exact, integrating the range
    // moments by parts collapses everything onto the tables; h(y) enters
    // through its left limit at x to first order.
    {
      const auto t0 = tick();
      const double u_t = std::exp(-kWindowSwitch);
      const ScaledReal b_rng = range_of(heavy_t_, y_table, x);
      const double bound_b =
          (ScaledReal::from_exp(y_table / rho_) * b_rng).to_double();
      const double gam = range_of(gamma_t_, grid_.x_min(), y_table).to_double();
      const double bound_b2 =
          (ScaledReal::from_exp((2.0 * y_table - x) / rho_) * b_rng).to_double();
      const double half = (ScaledReal::from_exp(-x / rho_) *
                           range_of(half_t_, grid_.x_min(), y_table))
                              .to_double();
      const double m_rng = range_of(mass_t_, y_table, x).to_double();
      const double a_pre =
          (ScaledReal::from_exp(-x / rho_) * prefix_at(grow_t_, y_table)).to_double();
      const double deep = h_left * (bound_b + gam) -
                          0.5 * rho_ * hp_left * (bound_b2 + half) +
                          std::exp(-alpha_ * x) * h_left * (u_t * m_rng + a_pre);
      sum += rho_ * deep;
      acc(t_deep, t0, tick());
    }

    return r1 + r2 + sum / rho_;
  }

  // ---- corrected remainder ----

  /// Right branch: R~(x) = R(x) - (1/(1+rho)) int_{L rho}^x e^{(y-x)/(1+rho)} R.
  void corrected_right(const ProfileInterpolant& r_interp, const std::vector<double>& r,
                       std::vector<double>& rt) const {
    rt[jr_] = r[jr_];
    double memory = 0.0;  // int_{L rho}^{x_i} e^{y/(1+rho)} R(y) dy
    const double kappa = -1.0 / (1.0 + rho_);
    for (std::size_t c = 0; c < grid_.cells().size(); ++c) {
      const auto& cell = grid_.cells()[c];
      if (cell.i0 < jr_) continue;
      memory += r_interp.cell_exp_moment(c, kappa);
      rt[cell.i1] = r[cell.i1] - memory *
                                     std::exp(-grid_.node(cell.i1) / (1.0 + rho_)) /
                                     (1.0 + rho_);
    }
  }

  /// Left branch via the substitution v = psi(x_i) - psi(y), which absorbs
  /// the factor (1/rho) e^{-alpha y} Q(y) = -psi'(y) exactly:
  ///   R~(x_i) = R(x_i) - M_i,
  ///   M_i = int_{x_i}^{L rho} e^{psi(y) - psi(x_i)} R(y) (-psi'(y)) dy.
  /// M obeys the one-cell recurrence M_i = local_i + e^{-dpsi_i} M_{i+1}
  /// whose factors all lie in [0, 1] x max|R|, so it runs in plain doubles;
  /// psi itself never enters, only the cancellation-free per-cell drop,
  /// which may exceed double exponent range without harm (exp underflows
  /// to the exact limit 0).
  void corrected_left(const ProfileInterpolant& r_interp, const std::vector<double>& r,
                      std::vector<double>& rt) const {
    rt[jl_] = r[jl_];
    double memory = 0.0;  // M at node i+1 while processing cell i
    for (std::size_t i = jl_; i-- > 0;) {
      const double xi = grid_.node(i);
      const auto& cell = grid_.cells()[i];  // left cells are index-aligned
      const double dpsi = psi_drop(xi, cell.width);
      const double vmax = std::min(dpsi, 45.0);
      double local = 0.0;
      if (vmax > 0.0) {
        const int panels = std::clamp(static_cast<int>(std::ceil(vmax / 1.5)), 1, 64);
        for (int p = 0; p < panels; ++p) {
          const double v0 = vmax * p / panels, v1 = vmax * (p + 1) / panels;
          local += gl8(
              [&](double v) {
                return std::exp(-v) *
                       r_interp.h(xi + invert_psi_drop(xi, cell.width, v));
              },
              v0, v1);
        }
      }
      memory = local + std::exp(-dpsi) * memory;
      rt[i] = r[i] - memory;
    }
  }

  /// Solve psi(xi) - psi(xi + delta) = v for delta in [0, width]: safeguarded
  /// Newton on the cancellation-free drop form.
  double invert_psi_drop(double xi, double width, double v) const {
    double lo = 0.0, hi = width;
    const double slope0 = psi_slope_abs(xi);
    double delta = slope0 > 0.0 ? std::min(v / slope0, width) : 0.5 * width;
    for (int it = 0; it < 40; ++it) {
      const double f = psi_drop(xi, delta) - v;
      if (f > 0.0)
        hi = delta;
      else
        lo = delta;
      if (std::abs(f) <= 1e-13 * (1.0 + v)) break;
      const double slope = psi_slope_abs(xi + delta);
      double next = slope > 0.0 ? delta - f / slope : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      delta = next;
    }
    return delta;
  }

  // ---- normalization constants ----

  /// The two output moment constraints determine (k1, k2):
  ///   (1 + lambda1) k1 + coupling k2 = 1/(1+rho) - nu1
  ///   lambda2 k1 + k2 = 1 - nu2.
  void solve_constants(MapParts& parts) const {
    double lam1 = 0.0, lam2 = 0.0;
    for (std::size_t c = 0; c < grid_.cells().size(); ++c) {
      const auto& cell = grid_.cells()[c];
      if (cell.i0 >= jl_) break;
      // psi decreases rightward; skip cells beyond the double-exponential
      // cliff even at their right end.
      if (parts.psi[cell.i1] > 745.0) continue;
      const double mid = cell.x0 + 0.5 * cell.width;
      for (std::size_t g = 0; g < kGl8Nodes.size(); ++g) {
        const double y = mid + 0.5 * cell.width * kGl8Nodes[g];
        const double wgt = 0.5 * cell.width * kGl8Weights[g];
        const double decay = std::exp(-psi(y));
        lam2 += wgt * decay;
        lam1 += wgt * decay * std::exp(-alpha_ * y);
      }
    }
    const double lambda1 = lam1 / rho_ - 1.0;
    const double lambda2 = lam2;

    GridFunction rt_gf(grid_ptr(), parts.corrected, 1.0 / (1.0 + rho_));
    const ProfileInterpolant rt_interp(rt_gf);
    const double inf = std::numeric_limits<double>::infinity();
    const double nu1 = exp_moment(rt_interp, alpha_, grid_.x_min(), inf) / rho_;
    const double nu2 = integrate(rt_interp, grid_.x_min(), inf);

    const double coupling = std::exp(-a_ * big_l_) / ((1.0 + rho_) * a_ + rho_);
    const double det = (1.0 + lambda1) - coupling * lambda2;
    require(std::abs(det) > 1e-6 * (1.0 + std::abs(lambda1)), ErrorCode::SingularSystem,
            "profile map: normalization system is near-singular");
    const double b1 = 1.0 / (1.0 + rho_) - nu1;
    const double b2 = 1.0 - nu2;

    parts.diag.lambda1 = lambda1;
    parts.diag.lambda2 = lambda2;
    parts.diag.nu1 = nu1;
    parts.diag.nu2 = nu2;
    parts.diag.k1 = (b1 - coupling * b2) / det;
    parts.diag.k2 = ((1.0 + lambda1) * b2 - lambda2 * b1) / det;
  }

  const Grid& grid_;
  ProfileInterpolant interp_;
  double a_, rho_, alpha_, beta_, big_l_, lrho_;
  std::size_t n_, jl_, jr_;
  MomentTable mass_t_, gamma_t_, heavy_t_, grow_t_, half_t_;
  MomentTable half2_t_, half3_t_, grow2_t_, grow3_t_, grow4_t_;
  double mass_total_ = 0.0;
  ScaledReal heavy_total_;
  double heavy_total_dbl_ = 0.0;
  std::size_t live_lo_ = 0;
};

}  // namespace

ProfileMap::ProfileMap(HomogeneousKernel kernel, std::shared_ptr<const Grid> grid)
    : kernel_(std::move(kernel)), grid_(std::move(grid)) {
  require(grid_ != nullptr, ErrorCode::InvalidArgument, "profile map: null grid");
  require(std::abs(kernel_.a() - grid_->weight().a) <= 1e-12, ErrorCode::InvalidArgument,
          "profile map: kernel homogeneity and weight parameter disagree");
}

GridFunction ProfileMap::apply(const GridFunction& h, MapDiagnostics* diag) const {
  MapParts parts = assemble(h);
  if (diag != nullptr) *diag = parts.diag;
  return std::move(parts.result);
}

MapParts ProfileMap::assemble(const GridFunction& h) const {
  require(kernel_.form() == HomogeneousKernel::Form::GeneralizedSum,
          ErrorCode::InvalidArgument,
          "profile map: the fast evaluation path requires the sum-form kernel");
  require(&h.grid() == grid_.get(), ErrorCode::InvalidArgument,
          "profile map: input lives on a different grid");
  MapEngine engine(kernel_, h);
  return engine.run();
}

double ProfileMap::equation_rhs_at(const ProfileInterpolant& h, double x,
                                   double rel_tol) const {
  const Grid& grid = h.grid();
  const double rho = grid.weight().rho;
  const double alpha = kernel_.a() / rho;
  const double lrho = grid.weight().L * grid.weight().rho;
  const double x_min = grid.x_min();
  if (x <= x_min) return 0.0;
  const double y_sw = x - rho * kLn2;  // fixed point of zeta(.; x)

  const QuadratureOptions outer_opts{rel_tol, 1e-280, 8192, true};
  const QuadratureOptions inner_opts{rel_tol * 0.3, 1e-280, 8192, true};

  auto wk_scaled = [&](double y, double z) {
    return ScaledReal::from_exp(-alpha * z) * kernel_.eval_reduced_log((y - z) / rho);
  };
  // Inner integral of wk(y, .) h over [z_lo, infinity), rescaled by the
  // integrand weight at z_lo so intermediate magnitudes stay inside double
  // range; the scale is returned separately.
  auto inner_scaled = [&](double y, double z_lo, ScaledReal* scale) {
    ScaledReal s = wk_scaled(y, z_lo);
    if (s.is_zero()) s = ScaledReal::from_double(1.0);
    const ScaledReal inv_s = ScaledReal::from_double(1.0 / s.mantissa()) *
                             ScaledReal::from_pow2(-static_cast<double>(s.exponent()));
    auto f = [&](double z) {
      const double hz = h.h(z);
      return hz == 0.0 ? 0.0 : (wk_scaled(y, z) * inv_s).to_double() * hz;
    };
    std::vector<double> cuts{z_lo, grid.x_max()};
    for (double c : {-lrho, lrho})
      if (c > z_lo && c < grid.x_max()) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t s2 = 0; s2 + 1 < cuts.size(); ++s2)
      total += adaptive_integrate(f, cuts[s2], cuts[s2 + 1], inner_opts);
    if (h.right_tail_value() != 0.0)
      total += integrate_to_infinity(f, grid.x_max(), h.right_tail_rate(), inner_opts);
    *scale = s;
    return total;
  };

  // Regular piece y <= y_sw: the window bottom zeta(y; x) stays above y_sw,
  // so the integrand is bounded and plain quadrature resolves it.
  double piece1 = 0.0;
  if (y_sw > x_min) {
    auto outer = [&](double y) {
      const double hy = h.h(y);
      if (hy == 0.0) return 0.0;
      ScaledReal scale;
      const double val = inner_scaled(y, std::max(zeta_curve(y, x, rho), x_min), &scale);
      return (scale * ScaledReal::from_double(hy * val)).to_double();
    };
    std::vector<double> cuts{x_min, y_sw};
    for (double c : {-lrho, lrho})
      if (c > x_min && c < y_sw) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s)
      piece1 += adaptive_integrate(outer, cuts[s], cuts[s + 1], outer_opts);
  }

  // Boundary layer y in (y_sw, x): substituting the involution zeta <-> y
  // stretches the sliver where the window bottom sweeps the deep region into
  // a regular integral; dy = u/(1-u) dzeta, u = e^{(zeta-x)/rho}.
  double piece2 = 0.0;
  {
    const double z_floor = std::min(x_min - 40.0 * rho, y_sw - rho);
    auto outer = [&](double zz) {
      const double u = std::exp((zz - x) / rho);
      const double y = x + rho * std::log1p(-u);
      const double hy = h.h(y);
      if (hy == 0.0) return 0.0;
      ScaledReal scale;
      const double val = inner_scaled(y, std::max(zz, x_min), &scale);
      return (scale * ScaledReal::from_exp((zz - x) / rho) *
              ScaledReal::from_double(hy * val / (1.0 - u)))
          .to_double();
    };
    std::vector<double> cuts{z_floor, y_sw};
    for (double c : {x_min, -lrho, lrho})
      if (c > z_floor && c < y_sw) cuts.push_back(c);
    if (lrho < x) {
      const double pre = zeta_curve(lrho, x, rho);  // y(zeta) crosses the kink
      if (pre > z_floor && pre < y_sw) cuts.push_back(pre);
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s)
      piece2 += adaptive_integrate(outer, cuts[s], cuts[s + 1], outer_opts);
  }
  return (piece1 + piece2) / rho;
}

double ProfileMap::weighted_equation_residual(const GridFunction& h, double rel_tol,
                                              std::size_t stride, double* arg_x) const {
  require(stride >= 1, ErrorCode::InvalidArgument, "residual: stride must be positive");
  const ProfileInterpolant interp(h);
  const Grid& grid = h.grid();
  const std::size_t jl = grid.jump_left_index();
  double worst = 0.0, worst_x = grid.x_min();
  double rhs_at_jump = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const bool forced = i == jl || i == jl + 1 || i == grid.size() - 1;
    if (!forced && i % stride != 0) continue;
    double rhs;
    if (i == jl + 1 && !std::isnan(rhs_at_jump)) {
      rhs = rhs_at_jump;  // same coordinate, hence the same double integral
    } else {
      rhs = equation_rhs_at(interp, grid.node(i), rel_tol);
      if (i == jl) rhs_at_jump = rhs;
    }
    const double res = std::abs(h[i] - rhs) * std::exp(-grid.omega_at(i));
    if (res > worst) {
      worst = res;
      worst_x = grid.node(i);
    }
  }
  if (arg_x != nullptr) *arg_x = worst_x;
  return worst;
}

}  // namespace coagprofile
