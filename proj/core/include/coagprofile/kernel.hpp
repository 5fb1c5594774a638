#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "coagprofile/scaled_real.hpp"

namespace coagprofile {

/// Result of sampling-based validation of the structural assumptions on a
/// coagulation kernel (small-argument singularity envelope, linear growth
/// bound at infinity, positivity, symmetry under argument exchange).
struct KernelChecks {
  bool passed = false;
  double k0_min = 0.0;            ///< smallest K0 making the singularity envelope hold on the samples
  double max_growth_ratio = 0.0;  ///< max of K(s,1)/s over large-s samples
  std::vector<std::string> messages;
};

/// Homogeneous coagulation rate kernel K(x, y) of degree gamma = 1 - a with
/// a power-law singularity x^-a as x/y -> 0.
///
/// Two forms are supported:
///  - GeneralizedSum: K(x, y) = y * x^-a + x * y^-a (exact closed form, and
///    the form whose reduced profile K(e^s, 1) splits into two pure
///    exponentials — the fixed-point solver's fast path requires this);
///  - UserTable: K(s, 1) tabulated on a log-log grid with exact power-law
///    asymptote extensions on both sides.
class HomogeneousKernel {
 public:
  enum class Form { GeneralizedSum, UserTable };

  /// Sum-form kernel. delta is the singularity-envelope exponent used in
  /// assumption checks (default a/2 capped at 1/2); k0 <= 0 means "use the
  /// smallest valid constant 2^(1+a-delta)".
  static HomogeneousKernel generalized_sum(double a, double k0 = -1.0, double delta = -1.0);

  /// Table-form kernel: log_k[i] = log K(exp(log_s[i]), 1) on a strictly
  /// increasing log_s grid. Outside the table the kernel continues with the
  /// exact asymptote shapes s^-a (left) and s (right), matched continuously
  /// at the table edges.
  static HomogeneousKernel user_table(double a, std::vector<double> log_s,
                                      std::vector<double> log_k, double k0 = -1.0,
                                      double delta = -1.0);

  Form form() const { return form_; }
  double a() const { return a_; }
  double gamma() const { return 1.0 - a_; }
  double k0() const { return k0_; }
  double delta() const { return delta_; }

  /// K(x, y) for positive arguments of moderate ratio (double range).
  double eval(double x, double y) const;

  /// K(s, 1).
  double eval_reduced(double s) const;

  /// K(e^t, 1) as a ScaledReal; usable for |t| far beyond double overflow.
  ScaledReal eval_reduced_log(double t) const;

  /// Sampling-based validation of the kernel-class assumptions.
  KernelChecks check_assumptions(int samples_per_decade = 64) const;

  nlohmann::json to_json() const;
  static HomogeneousKernel from_json(const nlohmann::json& j);

 private:
  HomogeneousKernel() = default;

  double log_reduced(double t) const;  ///< log K(e^t, 1) (table form only)

  Form form_ = Form::GeneralizedSum;
  double a_ = 0.5;
  double k0_ = 2.0;
  double delta_ = 0.25;
  std::vector<double> log_s_;
  std::vector<double> log_k_;
};

}  // namespace coagprofile
