#include "coagprofile/kernel.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace coagprofile {

namespace {

double default_delta(double a) { return std::min(0.5, 0.5 * a); }

/// Smallest K0 for which the sum kernel satisfies the singularity envelope
/// |s^a K(s,1) - 1| <= K0 s^delta on (0, 2): the deviation is exactly s^(1+a),
/// so the ratio peaks at the right endpoint.
double sum_kernel_k0(double a, double delta) { return std::pow(2.0, 1.0 + a - delta); }

}  // namespace

HomogeneousKernel HomogeneousKernel::generalized_sum(double a, double k0, double delta) {
  require(a > 0.0, ErrorCode::InvalidArgument, "kernel: a = 1 - gamma must be positive");
  HomogeneousKernel k;
  k.form_ = Form::GeneralizedSum;
  k.a_ = a;
  k.delta_ = delta > 0.0 ? delta : default_delta(a);
  require(k.delta_ < 1.0, ErrorCode::InvalidArgument, "kernel: delta must lie in (0, 1)");
  k.k0_ = k0 > 0.0 ? k0 : sum_kernel_k0(a, k.delta_);
  return k;
}

HomogeneousKernel HomogeneousKernel::user_table(double a, std::vector<double> log_s,
                                                std::vector<double> log_k, double k0,
                                                double delta) {
  require(a > 0.0, ErrorCode::InvalidArgument, "kernel: a = 1 - gamma must be positive");
  require(log_s.size() >= 2 && log_s.size() == log_k.size(), ErrorCode::InvalidArgument,
          "kernel: table needs >= 2 matching (log_s, log_k) samples");
  for (std::size_t i = 1; i < log_s.size(); ++i) {
    require(log_s[i] > log_s[i - 1], ErrorCode::InvalidArgument,
            "kernel: table abscissae must be strictly increasing");
  }
  HomogeneousKernel k;
  k.form_ = Form::UserTable;
  k.a_ = a;
  k.delta_ = delta > 0.0 ? delta : default_delta(a);
  require(k.delta_ < 1.0, ErrorCode::InvalidArgument, "kernel: delta must lie in (0, 1)");
  k.k0_ = k0 > 0.0 ? k0 : sum_kernel_k0(a, k.delta_);
  k.log_s_ = std::move(log_s);
  k.log_k_ = std::move(log_k);
  return k;
}

double HomogeneousKernel::log_reduced(double t) const {
  // Piecewise-linear in (log s, log K); power-law continuation outside.
  if (t <= log_s_.front()) return log_k_.front() - a_ * (t - log_s_.front());
  if (t >= log_s_.back()) return log_k_.back() + (t - log_s_.back());
  const auto it = std::upper_bound(log_s_.begin(), log_s_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - log_s_.begin()) - 1;
  const double w = (t - log_s_[i]) / (log_s_[i + 1] - log_s_[i]);
  return log_k_[i] + w * (log_k_[i + 1] - log_k_[i]);
}

double HomogeneousKernel::eval(double x, double y) const {
  require(x > 0.0 && y > 0.0, ErrorCode::InvalidArgument, "kernel: arguments must be positive");
  if (form_ == Form::GeneralizedSum) {
    return y * std::pow(x, -a_) + x * std::pow(y, -a_);
  }
  // Homogeneity: K(x, y) = y^gamma K(x/y, 1).
  return std::pow(y, gamma()) * std::exp(log_reduced(std::log(x) - std::log(y)));
}

double HomogeneousKernel::eval_reduced(double s) const {
  require(s > 0.0, ErrorCode::InvalidArgument, "kernel: reduced argument must be positive");
  if (form_ == Form::GeneralizedSum) return std::pow(s, -a_) + s;
  return std::exp(log_reduced(std::log(s)));
}

ScaledReal HomogeneousKernel::eval_reduced_log(double t) const {
  if (form_ == Form::GeneralizedSum) {
    return ScaledReal::from_exp(-a_ * t) + ScaledReal::from_exp(t);
  }
  return ScaledReal::from_exp(log_reduced(t));
}

KernelChecks HomogeneousKernel::check_assumptions(int samples_per_decade) const {
  require(samples_per_decade >= 4, ErrorCode::InvalidArgument,
          "kernel: need at least 4 samples per decade");
  KernelChecks out;
  out.passed = true;

  // Singularity envelope on (0, 2]: K0_min = sup |s^a K(s,1) - 1| / s^delta.
  const double lo = 1e-6, hi = 2.0;
  const int n_env = static_cast<int>(std::ceil(std::log10(hi / lo) * samples_per_decade));
  for (int i = 0; i <= n_env; ++i) {
    const double s = lo * std::pow(hi / lo, static_cast<double>(i) / n_env);
    const double k = eval_reduced(s);
    if (!(k > 0.0)) {
      out.passed = false;
      out.messages.push_back("kernel not positive at s = " + std::to_string(s));
      continue;
    }
    const double deviation = std::abs(std::pow(s, a_) * k - 1.0);
    out.k0_min = std::max(out.k0_min, deviation / std::pow(s, delta_));
  }
  if (out.k0_min > k0_ * (1.0 + 1e-9)) {
    out.passed = false;
    out.messages.push_back("declared K0 too small: need >= " + std::to_string(out.k0_min));
  }

  // Linear growth bound for s > 1: K(s, 1) <= (K0 + 1) s.
  const double hi_growth = 1e6;
  const int n_growth = static_cast<int>(std::ceil(std::log10(hi_growth) * samples_per_decade));
  for (int i = 0; i <= n_growth; ++i) {
    const double s = std::pow(hi_growth, static_cast<double>(i) / n_growth);
    out.max_growth_ratio = std::max(out.max_growth_ratio, eval_reduced(s) / s);
  }
  if (out.max_growth_ratio > (k0_ + 1.0) * (1.0 + 1e-9)) {
    out.passed = false;
    out.messages.push_back("growth bound K(s,1) <= (K0+1) s violated: ratio reaches " +
                           std::to_string(out.max_growth_ratio));
  }

  // Symmetry through homogeneity: K(s, 1) = s^gamma K(1/s, 1).
  double worst_symmetry = 0.0;
  for (int i = 0; i <= 64; ++i) {
    const double s = std::pow(10.0, -3.0 + 6.0 * i / 64.0);
    const double left = eval_reduced(s);
    const double right = std::pow(s, gamma()) * eval_reduced(1.0 / s);
    worst_symmetry = std::max(worst_symmetry, std::abs(left - right) / std::max(left, right));
  }
  const double symmetry_tol = form_ == Form::GeneralizedSum ? 1e-12 : 1e-9;
  if (worst_symmetry > symmetry_tol) {
    out.passed = false;
    out.messages.push_back("symmetry violated: relative mismatch " +
                           std::to_string(worst_symmetry));
  }
  return out;
}

nlohmann::json HomogeneousKernel::to_json() const {
  nlohmann::json j;
  j["form"] = form_ == Form::GeneralizedSum ? "generalized_sum" : "user_table";
  j["a"] = a_;
  j["k0"] = k0_;
  j["delta"] = delta_;
  if (form_ == Form::UserTable) {
    j["log_s"] = log_s_;
    j["log_k"] = log_k_;
  }
  return j;
}

HomogeneousKernel HomogeneousKernel::from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::IoError, "kernel json: expected an object");
  double a = 0.0;
  if (j.contains("a")) {
    a = j.at("a").get<double>();
  } else if (j.contains("gamma")) {
    a = 1.0 - j.at("gamma").get<double>();
  } else {
    fail(ErrorCode::IoError, "kernel json: need \"a\" or \"gamma\"");
  }
  const double k0 = j.value("k0", -1.0);
  const double delta = j.value("delta", -1.0);
  const std::string form = j.value("form", "generalized_sum");
  if (form == "generalized_sum") return generalized_sum(a, k0, delta);
  if (form == "user_table") {
    require(j.contains("log_s") && j.contains("log_k"), ErrorCode::IoError,
            "kernel json: user_table form needs log_s and log_k arrays");
    return user_table(a, j.at("log_s").get<std::vector<double>>(),
                      j.at("log_k").get<std::vector<double>>(), k0, delta);
  }
  fail(ErrorCode::IoError, "kernel json: unknown form \"" + form + "\"");
}

}  // namespace coagprofile
