#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "coagprofile/errors.hpp"
#include "coagprofile/scaled_real.hpp"

namespace coagprofile {

/// Parameters of the weighted space the iteration lives in. The weight
/// exponent omega is piecewise linear: slope m/rho far left of the layer
/// [-L rho, L rho], zero inside it, slope -1/2 to the right. Profiles are
/// measured by sup |h| e^-omega, and the invariant ball is |h| <= 2 e^omega.
struct WeightSpec {
  double rho = 0.1;  ///< tail-exponent parameter, in (0, 1)
  double a = 0.5;    ///< 1 - gamma, the kernel singularity strength
  double m = 1.75;   ///< left decay-rate parameter, must exceed max(a+1, 3a)
  double L = 4.0;    ///< half-width of the flat layer in units of rho

  void validate() const;
};

/// Weight exponent omega(x): (m/rho)(x + L rho) left of the layer, 0 inside,
/// -(x - L rho)/2 to the right. Always <= 0.
double omega(const WeightSpec& w, double x);

/// Mesh block counts and truncation overrides. Non-finite x_min/x_max mean
/// "choose automatically from the weight parameters": the left cut is where
/// the double-exponential envelope drops below ~1e-300, the right cut is
/// where the slowest admissible tail is ~1e-12 of its scale.
struct GridConfig {
  int geometric_cells = 256;  ///< cells between x_min and the padded layer
  int layer_cells = 768;      ///< cells across the padded layer
  int right_cells = 1024;     ///< cells from the padded layer to x_max
  double layer_pad = 5.0;     ///< padded layer = [-(L+pad) rho, (L+pad) rho]
  double x_min = 0.0 / 0.0;   ///< left truncation (auto if NaN)
  double x_max = 0.0 / 0.0;   ///< right truncation (auto if NaN)
};

/// Node mesh adapted to the weighted space: geometrically coarsening cells in
/// the deep left tail, uniform cells across the padded layer, uniform coarse
/// cells to the right. Nodes land exactly on -L rho and L rho; the node at
/// L rho is doubled (left-branch and right-branch values), because profiles
/// are allowed a jump there.
class Grid {
 public:
  struct Cell {
    double x0 = 0.0, x1 = 0.0, width = 0.0;
    double omega0 = 0.0;       ///< omega at x0
    double omega_slope = 0.0;  ///< omega is linear within a cell
    std::size_t i0 = 0, i1 = 0;  ///< node indices carrying the endpoint values
  };

  static std::shared_ptr<const Grid> build(const WeightSpec& weight, const GridConfig& config = {});

  const WeightSpec& weight() const { return weight_; }
  const GridConfig& config() const { return config_; }

  const std::vector<double>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  double node(std::size_t i) const { return nodes_[i]; }
  double omega_at(std::size_t i) const { return omega_[i]; }

  double x_min() const { return nodes_.front(); }
  double x_max() const { return nodes_.back(); }

  /// Index of the node at L rho carrying the left-branch value; the node at
  /// jump_left_index()+1 sits at the same coordinate and carries the
  /// right-branch value.
  std::size_t jump_left_index() const { return jump_left_; }
  std::size_t jump_right_index() const { return jump_left_ + 1; }

  /// Index of the node exactly at -L rho.
  std::size_t minus_lrho_index() const { return minus_lrho_; }

  const std::vector<Cell>& cells() const { return cells_; }

  /// Cell containing x (clamped to the mesh range).
  std::size_t find_cell(double x) const;

  /// Node ranges [begin, end] of the three C1 interpolation blocks
  /// (boundaries at the weight kinks -L rho and the doubled node at L rho).
  std::array<std::pair<std::size_t, std::size_t>, 3> interpolation_blocks() const;

  nlohmann::json to_json() const;
  static std::shared_ptr<const Grid> from_json(const nlohmann::json& j);

 private:
  Grid() = default;
  void finalize();  ///< fills omega_, cells_, indices from nodes_

  WeightSpec weight_;
  GridConfig config_;
  std::vector<double> nodes_;
  std::vector<double> omega_;
  std::vector<Cell> cells_;
  std::vector<double> cell_x0_;
  std::size_t jump_left_ = 0;
  std::size_t minus_lrho_ = 0;
};

/// Node values of a profile on a Grid, plus the analytic tail continuations:
/// exactly zero below x_min (the envelope there is < 1e-300 by construction)
/// and exponential with the stored rate beyond x_max, anchored at the last
/// node value.
class GridFunction {
 public:
  GridFunction(std::shared_ptr<const Grid> grid, std::vector<double> values,
               double right_tail_rate);

  /// Zero profile with the given tail rate.
  static GridFunction zeros(std::shared_ptr<const Grid> grid, double right_tail_rate);

  const Grid& grid() const { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  double right_tail_rate() const { return right_tail_rate_; }
  void set_right_tail_rate(double rate) { right_tail_rate_ = rate; }

  /// sup over nodes of |h| e^-omega.
  double weighted_norm() const;

  nlohmann::json to_json() const;
  static GridFunction from_json(const nlohmann::json& j);
  void write_csv(std::ostream& out) const;

 private:
  std::shared_ptr<const Grid> grid_;
  std::vector<double> values_;
  double right_tail_rate_;
};

/// Exact integral over t in [0, tau] of (c0 + c1 t + c2 t^2 + c3 t^3) e^(sigma t),
/// stable for any sigma (series for small |sigma|, recurrence otherwise).
double exp_cubic_integral(const std::array<double, 4>& c, double sigma, double tau = 1.0);

/// C1 piecewise-cubic model of a profile: monotonicity-preserving cubic
/// interpolation of the weighted values g = h e^-omega, block-wise between
/// the weight kinks, with h recovered as g e^omega. Evaluation below x_min
/// gives exactly 0; above x_max the stored exponential tail.
class ProfileInterpolant {
 public:
  explicit ProfileInterpolant(const GridFunction& f);

  const Grid& grid() const { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }

  double h(double x) const;
  double g(double x) const;  ///< h e^-omega

  /// One-sided derivative of h (right branch at the doubled node and at cell
  /// boundaries); the exponential-tail derivative beyond x_max, 0 below x_min.
  double h_prime(double x) const;

  double right_tail_rate() const { return right_tail_rate_; }
  double right_tail_value() const { return right_tail_value_; }  ///< h at x_max

  /// Coefficients of g on cell j in the local variable t = (x - x0)/width.
  const std::array<double, 4>& cell_poly(std::size_t j) const { return polys_[j]; }

  /// Exact integral of e^(-kappa x) h(x) over one full cell.
  double cell_exp_moment(std::size_t j, double kappa) const;

  /// Exact integral of e^(-kappa x) h(x) over [xa, xb] intersected with cell j.
  double cell_exp_moment_partial(std::size_t j, double kappa, double xa, double xb) const;

  /// ScaledReal variants for weights whose prefactor e^(-kappa x0) leaves
  /// double range (e.g. kappa = -1/rho far to the right).
  ScaledReal cell_exp_moment_scaled(std::size_t j, double kappa) const;
  ScaledReal cell_exp_moment_partial_scaled(std::size_t j, double kappa, double xa,
                                            double xb) const;

 private:
  std::shared_ptr<const Grid> grid_;
  std::vector<std::array<double, 4>> polys_;  ///< per cell
  double right_tail_rate_ = 1.0;
  double right_tail_value_ = 0.0;
};

/// Integral of e^(-kappa x) h(x) over [lo, hi] (hi may be +inf; the right
/// tail is integrated in closed form and requires kappa + tail rate > 0).
double exp_moment(const ProfileInterpolant& f, double kappa, double lo, double hi);

/// Integral of h over [lo, hi]; defaults to the whole line.
double integrate(const ProfileInterpolant& f, double lo, double hi);

/// Mass constraint functional M(h) = integral of h over the line.
double mass_moment(const ProfileInterpolant& f);

/// Tail constraint functional (1/rho) integral of e^(-(a/rho) x) h(x);
/// equals 1/(1+rho) for admissible profiles.
double gamma_moment(const ProfileInterpolant& f);

double mass_moment(const GridFunction& f);
double gamma_moment(const GridFunction& f);

}  // namespace coagprofile
