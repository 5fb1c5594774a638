#include "coagprofile/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

namespace coagprofile {

void WeightSpec::validate() const {
  require(rho > 0.0 && rho < 1.0, ErrorCode::InvalidArgument, "weight: rho must lie in (0, 1)");
  require(a > 0.0, ErrorCode::InvalidArgument, "weight: a must be positive");
  require(m > std::max(a + 1.0, 3.0 * a), ErrorCode::InvalidArgument,
          "weight: m must exceed max(a+1, 3a)");
  require(L > 0.0, ErrorCode::InvalidArgument, "weight: L must be positive");
}

double omega(const WeightSpec& w, double x) {
  const double lrho = w.L * w.rho;
  if (x <= -lrho) return (w.m / w.rho) * (x + lrho);
  if (x >= lrho) return -0.5 * (x - lrho);
  return 0.0;
}

namespace {

double auto_x_min(const WeightSpec& w) {
  // Left of this point the double-exponential envelope e^((1/2a)(e^-aL - e^-ax/rho))
  // is below 1e-300; profiles are treated as exactly zero there.
  return -(w.rho / w.a) * (std::log(1382.0 * w.a) + 0.7);
}

double auto_x_max(const WeightSpec& w) {
  // Right of this point the slowest admissible tail envelope e^-(x-Lrho)/2
  // is below 1e-10, which is beyond every tolerance used downstream.
  return w.L * w.rho + 2.0 * std::log(1e10) + 2.0;
}

/// Geometric cell-width ratio r >= 1 with first width `w0` covering `span`
/// in `n` cells: w0 (r + r^2 + ... + r^n) = span.
double solve_geometric_ratio(double w0, double span, int n) {
  auto total = [&](double r) {
    double sum = 0.0, p = 1.0;
    for (int i = 0; i < n; ++i) {
      p *= r;
      sum += p;
    }
    return w0 * sum;
  };
  if (total(1.0) >= span) return 1.0;  // uniform cells already cover the span
  double lo = 1.0, hi = 1.5;
  while (total(hi) < span) {
    hi *= 1.5;
    require(hi < 1e3, ErrorCode::RegionDegenerate, "grid: geometric block cannot cover the span");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < span ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void append_uniform(std::vector<double>& nodes, double lo, double hi, int cells) {
  // Assumes `lo` is already the last node; appends the interior and `hi`.
  for (int i = 1; i < cells; ++i) nodes.push_back(lo + (hi - lo) * i / cells);
  nodes.push_back(hi);
}

}  // namespace

std::shared_ptr<const Grid> Grid::build(const WeightSpec& weight, const GridConfig& config) {
  weight.validate();
  require(config.geometric_cells >= 8 && config.layer_cells >= 64 && config.right_cells >= 8,
          ErrorCode::InvalidArgument,
          "grid: need >= 8 geometric, >= 64 layer, >= 8 right cells");
  require(config.layer_pad > 0.0, ErrorCode::InvalidArgument, "grid: layer_pad must be positive");

  const double lrho = weight.L * weight.rho;
  const double b0 = -(weight.L + config.layer_pad) * weight.rho;
  const double b3 = -b0;

  double x_min = std::isfinite(config.x_min) ? config.x_min : auto_x_min(weight);
  if (x_min > b0 - 1e-12) x_min = b0 - config.layer_pad * weight.rho;  // keep the block real
  double x_max = std::isfinite(config.x_max) ? config.x_max : auto_x_max(weight);
  require(x_max > b3 + 1.0, ErrorCode::InvalidArgument,
          "grid: x_max must exceed the padded layer by at least 1");

  // Distribute the layer cells over the three uniform sub-blocks
  // [b0, -Lrho], [-Lrho, Lrho], [Lrho, b3] proportionally to length.
  const double target_width = (b3 - b0) / config.layer_cells;
  int n_pad = std::max(4, static_cast<int>(std::lround((-lrho - b0) / target_width)));
  int n_core = config.layer_cells - 2 * n_pad;
  require(n_core >= 32, ErrorCode::InvalidArgument,
          "grid: layer_cells too small to keep >= 32 cells inside [-L rho, L rho]");

  auto grid = std::shared_ptr<Grid>(new Grid());
  grid->weight_ = weight;
  grid->config_ = config;
  grid->config_.x_min = x_min;
  grid->config_.x_max = x_max;

  std::vector<double>& nodes = grid->nodes_;
  nodes.reserve(static_cast<std::size_t>(config.geometric_cells + config.layer_cells +
                                         config.right_cells + 2));

  // Geometric block, widths growing from the padded layer edge toward x_min
  // (uniform if layer-width cells already cover the span).
  const double pad_width = (-lrho - b0) / n_pad;
  const double span = b0 - x_min;
  const double ratio = solve_geometric_ratio(pad_width, span, config.geometric_cells);
  nodes.push_back(x_min);
  if (ratio == 1.0) {
    append_uniform(nodes, x_min, b0, config.geometric_cells);
  } else {
    std::vector<double> offsets;  // distances below b0, innermost first
    double widths = 0.0, p = 1.0;
    for (int i = 0; i < config.geometric_cells - 1; ++i) {
      p *= ratio;
      widths += pad_width * p;
      offsets.push_back(widths);
    }
    for (auto it = offsets.rbegin(); it != offsets.rend(); ++it) nodes.push_back(b0 - *it);
    nodes.push_back(b0);
  }

  append_uniform(nodes, b0, -lrho, n_pad);
  grid->minus_lrho_ = nodes.size() - 1;
  append_uniform(nodes, -lrho, lrho, n_core);
  grid->jump_left_ = nodes.size() - 1;
  nodes.push_back(lrho);  // doubled node: right-branch value lives here
  append_uniform(nodes, lrho, b3, n_pad);
  append_uniform(nodes, b3, x_max, config.right_cells);

  grid->finalize();
  return grid;
}

void Grid::finalize() {
  const std::size_t n = nodes_.size();
  omega_.resize(n);
  for (std::size_t i = 0; i < n; ++i) omega_[i] = omega(weight_, nodes_[i]);

  cells_.clear();
  cell_x0_.clear();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (i == jump_left_) continue;  // zero-width pair at L rho
    Cell c;
    c.x0 = nodes_[i];
    c.x1 = nodes_[i + 1];
    c.width = c.x1 - c.x0;
    require(c.width > 0.0, ErrorCode::RegionDegenerate, "grid: non-increasing nodes");
    c.i0 = i;
    c.i1 = i + 1;
    c.omega0 = omega_[i];
    const double lrho = weight_.L * weight_.rho;
    const double mid = 0.5 * (c.x0 + c.x1);
    c.omega_slope = mid <= -lrho ? weight_.m / weight_.rho : (mid >= lrho ? -0.5 : 0.0);
    cells_.push_back(c);
    cell_x0_.push_back(c.x0);
  }
}

std::size_t Grid::find_cell(double x) const {
  if (x <= cells_.front().x1) return 0;
  if (x >= cells_.back().x0) return cells_.size() - 1;
  const auto it = std::upper_bound(cell_x0_.begin(), cell_x0_.end(), x);
  return static_cast<std::size_t>(it - cell_x0_.begin()) - 1;
}

std::array<std::pair<std::size_t, std::size_t>, 3> Grid::interpolation_blocks() const {
  return {std::pair<std::size_t, std::size_t>{0, minus_lrho_},
          {minus_lrho_, jump_left_},
          {jump_left_ + 1, nodes_.size() - 1}};
}

nlohmann::json Grid::to_json() const {
  return nlohmann::json{
      {"weight", {{"rho", weight_.rho}, {"a", weight_.a}, {"m", weight_.m}, {"L", weight_.L}}},
      {"config",
       {{"geometric_cells", config_.geometric_cells},
        {"layer_cells", config_.layer_cells},
        {"right_cells", config_.right_cells},
        {"layer_pad", config_.layer_pad},
        {"x_min", config_.x_min},
        {"x_max", config_.x_max}}}};
}

std::shared_ptr<const Grid> Grid::from_json(const nlohmann::json& j) {
  WeightSpec w;
  const auto& jw = j.at("weight");
  w.rho = jw.at("rho").get<double>();
  w.a = jw.at("a").get<double>();
  w.m = jw.at("m").get<double>();
  w.L = jw.at("L").get<double>();
  GridConfig c;
  const auto& jc = j.at("config");
  c.geometric_cells = jc.at("geometric_cells").get<int>();
  c.layer_cells = jc.at("layer_cells").get<int>();
  c.right_cells = jc.at("right_cells").get<int>();
  c.layer_pad = jc.at("layer_pad").get<double>();
  c.x_min = jc.at("x_min").get<double>();
  c.x_max = jc.at("x_max").get<double>();
  return build(w, c);
}

GridFunction::GridFunction(std::shared_ptr<const Grid> grid, std::vector<double> values,
                           double right_tail_rate)
    : grid_(std::move(grid)), values_(std::move(values)), right_tail_rate_(right_tail_rate) {
  require(grid_ != nullptr, ErrorCode::InvalidArgument, "grid function: null grid");
  require(values_.size() == grid_->size(), ErrorCode::InvalidArgument,
          "grid function: values/nodes size mismatch");
  require(right_tail_rate_ > 0.0, ErrorCode::InvalidArgument,
          "grid function: right tail rate must be positive");
}

GridFunction GridFunction::zeros(std::shared_ptr<const Grid> grid, double right_tail_rate) {
  std::vector<double> v(grid->size(), 0.0);
  return GridFunction(std::move(grid), std::move(v), right_tail_rate);
}

double GridFunction::weighted_norm() const {
  double norm = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    norm = std::max(norm, std::abs(values_[i]) * std::exp(-grid_->omega_at(i)));
  }
  return norm;
}

nlohmann::json GridFunction::to_json() const {
  return nlohmann::json{{"grid", grid_->to_json()},
                        {"values", values_},
                        {"right_tail_rate", right_tail_rate_}};
}

GridFunction GridFunction::from_json(const nlohmann::json& j) {
  auto grid = Grid::from_json(j.at("grid"));
  return GridFunction(std::move(grid), j.at("values").get<std::vector<double>>(),
                      j.at("right_tail_rate").get<double>());
}

void GridFunction::write_csv(std::ostream& out) const {
  out << "x,h,weighted_h\n";
  char line[128];
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double w = values_[i] * std::exp(-grid_->omega_at(i));
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", grid_->node(i), values_[i], w);
    out << line;
  }
}

double exp_cubic_integral(const std::array<double, 4>& c, double sigma, double tau) {
  require(tau >= 0.0 && tau <= 1.0 + 1e-12, ErrorCode::InvalidArgument,
          "exp_cubic_integral: tau must lie in [0, 1]");
  if (tau <= 0.0) return 0.0;
  double moments[4];  // moments[k] = int_0^tau t^k e^(sigma t) dt
  const double st = sigma * tau;
  if (std::abs(st) < 0.5) {
    // Series in sigma: int t^k e^(sigma t) = tau^(k+1) sum_j (sigma tau)^j / (j! (k+j+1)).
    for (int k = 0; k < 4; ++k) {
      double term = 1.0 / (k + 1);
      double sum = term;
      double factor = 1.0;
      for (int j = 1; j < 30; ++j) {
        factor *= st / j;
        const double add = factor / (k + j + 1);
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
      }
      moments[k] = std::pow(tau, k + 1) * sum;
    }
  } else if (sigma > 0.0) {
    // Upward recurrence: I_k = (tau^k e^(sigma tau) - k I_(k-1)) / sigma.
    const double e = std::exp(st);
    moments[0] = (e - 1.0) / sigma;
    double tk = 1.0;
    for (int k = 1; k < 4; ++k) {
      tk *= tau;
      moments[k] = (tk * e - k * moments[k - 1]) / sigma;
    }
  } else {
    // sigma < 0: reflect t -> tau - u so the recurrence runs with |sigma|,
    // keeping every intermediate bounded: J'_j = e^(sigma tau) int u^j e^(|sigma| u).
    const double s = -sigma;
    const double e = std::exp(st);  // <= 1
    double jp[4];
    jp[0] = (1.0 - e) / s;
    double tk = 1.0;
    for (int j = 1; j < 4; ++j) {
      tk *= tau;
      jp[j] = (tk - j * jp[j - 1]) / s;
    }
    // I_k = sum_m C(k,m) tau^(k-m) (-1)^m J'_m.
    static const double binom[4][4] = {
        {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
    for (int k = 0; k < 4; ++k) {
      double sum = 0.0, tpow = std::pow(tau, k);
      for (int m = 0; m <= k; ++m) {
        sum += binom[k][m] * tpow * (m % 2 == 0 ? 1.0 : -1.0) * jp[m];
        if (m < k) tpow /= tau;
      }
      moments[k] = sum;
    }
  }
  return c[0] * moments[0] + c[1] * moments[1] + c[2] * moments[2] + c[3] * moments[3];
}

namespace {

/// Derivative at x_eval of the Lagrange cubic through 4 points starting at
/// index `first` of (x, g).
double cubic_fit_slope(const std::vector<double>& x, const std::vector<double>& g,
                       std::size_t first, double x_eval) {
  double slope = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double xk = x[first + k];
    double denom = 1.0;
    for (int m = 0; m < 4; ++m) {
      if (m != k) denom *= xk - x[first + m];
    }
    // derivative of prod_{m != k} (x - x_m) at x_eval
    double dnum = 0.0;
    for (int m = 0; m < 4; ++m) {
      if (m == k) continue;
      double term = 1.0;
      for (int l = 0; l < 4; ++l) {
        if (l == k || l == m) continue;
        term *= x_eval - x[first + l];
      }
      dnum += term;
    }
    slope += g[first + k] * dnum / denom;
  }
  return slope;
}

/// Monotonicity-preserving cubic slopes on one block: 4-point cubic-fit
/// estimates (4th order where the data is smooth and resolved), limited to
/// the Fritsch-Carlson monotone region so the interpolant never overshoots
/// between nodes.
void limited_cubic_slopes(const std::vector<double>& x, const std::vector<double>& g,
                          std::size_t begin, std::size_t end, std::vector<double>& d) {
  if (end <= begin) return;
  const std::size_t n = end - begin + 1;
  if (n == 2) {
    const double s = (g[begin + 1] - g[begin]) / (x[begin + 1] - x[begin]);
    d[begin] = s;
    d[begin + 1] = s;
    return;
  }

  std::vector<double> secant(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    secant[i] = (g[begin + i + 1] - g[begin + i]) / (x[begin + i + 1] - x[begin + i]);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t node = begin + i;
    // Raw estimate: average of the cubic fits through the stencils ending and
    // starting at this node (whichever exist inside the block).
    double raw = 0.0;
    if (n >= 4) {
      int count = 0;
      // stencil [i-2, i+1]
      if (i >= 2 && i + 1 < n) {
        raw += cubic_fit_slope(x, g, node - 2, x[node]);
        ++count;
      }
      // stencil [i-1, i+2]
      if (i >= 1 && i + 2 < n) {
        raw += cubic_fit_slope(x, g, node - 1, x[node]);
        ++count;
      }
      if (count == 0) {
        // block edge: one-sided stencil
        const std::size_t first = i == 0 ? node : node - 3;
        raw = cubic_fit_slope(x, g, first, x[node]);
        count = 1;
      }
      raw /= count;
    } else {
      // 3-point block: parabola slope
      const double h0 = x[begin + 1] - x[begin], h1 = x[begin + 2] - x[begin + 1];
      if (i == 0) {
        raw = ((2.0 * h0 + h1) * secant[0] - h0 * secant[1]) / (h0 + h1);
      } else if (i == 1) {
        raw = (h1 * secant[0] + h0 * secant[1]) / (h0 + h1);
      } else {
        raw = ((2.0 * h1 + h0) * secant[1] - h1 * secant[0]) / (h0 + h1);
      }
    }

    // Monotone limiting against the adjacent secants.
    const bool has_left = i > 0, has_right = i + 1 < n;
    const double s_left = has_left ? secant[i - 1] : secant[i];
    const double s_right = has_right ? secant[i] : secant[i - 1];
    if (has_left && has_right && s_left * s_right <= 0.0) {
      raw = 0.0;  // local extremum
    } else {
      const double s_ref = has_left && has_right
                               ? (std::abs(s_left) < std::abs(s_right) ? s_left : s_right)
                               : (has_right ? s_right : s_left);
      if (raw * s_ref <= 0.0) {
        raw = 0.0;
      } else if (std::abs(raw) > 3.0 * std::abs(s_ref)) {
        raw = 3.0 * s_ref;
      }
    }
    d[node] = raw;
  }
}

}  // namespace

ProfileInterpolant::ProfileInterpolant(const GridFunction& f) : grid_(f.grid_ptr()) {
  const Grid& grid = *grid_;
  const std::size_t n = grid.size();
  std::vector<double> g(n), slopes(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) g[i] = f[i] * std::exp(-grid.omega_at(i));

  // Adjacent blocks share their boundary node, where g' is genuinely
  // one-sided (the weight slope changes there), so each block's cells must
  // be assembled from that block's own slope pass before the next pass
  // overwrites the shared entry.
  polys_.resize(grid.cells().size());
  for (const auto& [begin, end] : grid.interpolation_blocks()) {
    limited_cubic_slopes(grid.nodes(), g, begin, end, slopes);
    for (std::size_t j = 0; j < polys_.size(); ++j) {
      const Grid::Cell& cell = grid.cells()[j];
      if (cell.i0 < begin || cell.i1 > end) continue;
      const double g0 = g[cell.i0], g1 = g[cell.i1];
      const double d0 = slopes[cell.i0] * cell.width, d1 = slopes[cell.i1] * cell.width;
      polys_[j] = {g0, d0, 3.0 * (g1 - g0) - 2.0 * d0 - d1, 2.0 * (g0 - g1) + d0 + d1};
    }
  }

  right_tail_rate_ = f.right_tail_rate();
  right_tail_value_ = f.values().back();
}

double ProfileInterpolant::g(double x) const {
  const Grid& grid = *grid_;
  if (x < grid.x_min()) return 0.0;
  if (x >= grid.x_max()) {
    return right_tail_value_ * std::exp(-right_tail_rate_ * (x - grid.x_max())) *
           std::exp(-omega(grid.weight(), x));
  }
  const std::size_t j = grid.find_cell(x);
  const Grid::Cell& cell = grid.cells()[j];
  const double t = (x - cell.x0) / cell.width;
  const auto& c = polys_[j];
  return ((c[3] * t + c[2]) * t + c[1]) * t + c[0];
}

double ProfileInterpolant::h(double x) const {
  const Grid& grid = *grid_;
  if (x < grid.x_min()) return 0.0;
  if (x >= grid.x_max()) {
    return right_tail_value_ * std::exp(-right_tail_rate_ * (x - grid.x_max()));
  }
  const std::size_t j = grid.find_cell(x);
  const Grid::Cell& cell = grid.cells()[j];
  const double t = (x - cell.x0) / cell.width;
  const auto& c = polys_[j];
  const double gval = ((c[3] * t + c[2]) * t + c[1]) * t + c[0];
  return gval * std::exp(cell.omega0 + cell.omega_slope * (x - cell.x0));
}

double ProfileInterpolant::h_prime(double x) const {
  const Grid& grid = *grid_;
  if (x < grid.x_min()) return 0.0;
  if (x >= grid.x_max()) {
    return -right_tail_rate_ * right_tail_value_ *
           std::exp(-right_tail_rate_ * (x - grid.x_max()));
  }
  const std::size_t j = grid.find_cell(x);
  const Grid::Cell& cell = grid.cells()[j];
  const double t = (x - cell.x0) / cell.width;
  const auto& c = polys_[j];
  const double gval = ((c[3] * t + c[2]) * t + c[1]) * t + c[0];
  const double gder = ((3.0 * c[3] * t + 2.0 * c[2]) * t + c[1]) / cell.width;
  return (cell.omega_slope * gval + gder) *
         std::exp(cell.omega0 + cell.omega_slope * (x - cell.x0));
}

double ProfileInterpolant::cell_exp_moment(std::size_t j, double kappa) const {
  const Grid::Cell& cell = grid_->cells()[j];
  const double sigma = (cell.omega_slope - kappa) * cell.width;
  const double prefactor = std::exp(cell.omega0 - kappa * cell.x0);
  return prefactor * cell.width * exp_cubic_integral(polys_[j], sigma);
}

double ProfileInterpolant::cell_exp_moment_partial(std::size_t j, double kappa, double xa,
                                                   double xb) const {
  const Grid::Cell& cell = grid_->cells()[j];
  const double lo = std::max(xa, cell.x0), hi = std::min(xb, cell.x1);
  if (hi <= lo) return 0.0;
  const double sigma = (cell.omega_slope - kappa) * cell.width;
  const double ta = (lo - cell.x0) / cell.width, tb = (hi - cell.x0) / cell.width;
  const double prefactor = std::exp(cell.omega0 - kappa * cell.x0);
  const double full_b = exp_cubic_integral(polys_[j], sigma, tb);
  const double full_a = exp_cubic_integral(polys_[j], sigma, ta);
  return prefactor * cell.width * (full_b - full_a);
}

ScaledReal ProfileInterpolant::cell_exp_moment_scaled(std::size_t j, double kappa) const {
  const Grid::Cell& cell = grid_->cells()[j];
  const double sigma = (cell.omega_slope - kappa) * cell.width;
  const double body = cell.width * exp_cubic_integral(polys_[j], sigma);
  if (body == 0.0) return ScaledReal::zero();
  return ScaledReal::from_exp(cell.omega0 - kappa * cell.x0) * ScaledReal::from_double(body);
}

ScaledReal ProfileInterpolant::cell_exp_moment_partial_scaled(std::size_t j, double kappa,
                                                              double xa, double xb) const {
  const Grid::Cell& cell = grid_->cells()[j];
  const double lo = std::max(xa, cell.x0), hi = std::min(xb, cell.x1);
  if (hi <= lo) return ScaledReal::zero();
  const double sigma = (cell.omega_slope - kappa) * cell.width;
  const double ta = (lo - cell.x0) / cell.width, tb = (hi - cell.x0) / cell.width;
  const double body =
      cell.width * (exp_cubic_integral(polys_[j], sigma, tb) - exp_cubic_integral(polys_[j], sigma, ta));
  if (body == 0.0) return ScaledReal::zero();
  return ScaledReal::from_exp(cell.omega0 - kappa * cell.x0) * ScaledReal::from_double(body);
}

double exp_moment(const ProfileInterpolant& f, double kappa, double lo, double hi) {
  const Grid& grid = f.grid();
  double total = 0.0;
  const double effective_lo = std::max(lo, grid.x_min());
  const double effective_hi = std::min(hi, grid.x_max());
  if (effective_hi > effective_lo) {
    const std::size_t j_lo = grid.find_cell(effective_lo);
    const std::size_t j_hi = grid.find_cell(effective_hi);
    for (std::size_t j = j_lo; j <= j_hi; ++j) {
      const Grid::Cell& cell = grid.cells()[j];
      if (effective_lo <= cell.x0 && cell.x1 <= effective_hi) {
        total += f.cell_exp_moment(j, kappa);
      } else {
        total += f.cell_exp_moment_partial(j, kappa, effective_lo, effective_hi);
      }
    }
  }
  if (hi > grid.x_max()) {
    // Closed-form tail: value * exp(-kappa x_max) / (rate + kappa), adjusted
    // if the requested range starts inside the tail.
    const double rate = f.right_tail_rate();
    require(rate + kappa > 0.0, ErrorCode::InvalidArgument,
            "exp_moment: tail integral diverges for this kappa");
    const double start = std::max(lo, grid.x_max());
    const double v0 = f.right_tail_value() * std::exp(-rate * (start - grid.x_max()));
    const double upper = std::isfinite(hi)
                             ? 1.0 - std::exp(-(rate + kappa) * (hi - start))
                             : 1.0;
    total += v0 * std::exp(-kappa * start) / (rate + kappa) * upper;
  }
  return total;
}

double integrate(const ProfileInterpolant& f, double lo, double hi) {
  return exp_moment(f, 0.0, lo, hi);
}

double mass_moment(const ProfileInterpolant& f) {
  return exp_moment(f, 0.0, -std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity());
}

double gamma_moment(const ProfileInterpolant& f) {
  const WeightSpec& w = f.grid().weight();
  return exp_moment(f, w.a / w.rho, -std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity()) /
         w.rho;
}

double mass_moment(const GridFunction& f) { return mass_moment(ProfileInterpolant(f)); }
double gamma_moment(const GridFunction& f) { return gamma_moment(ProfileInterpolant(f)); }

}  // namespace coagprofile
