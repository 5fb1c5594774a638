#include <doctest.h>

#include <cmath>
#include <vector>

#include "coagprofile/kernel.hpp"

#include <nlohmann/json.hpp>

using namespace coagprofile;

TEST_CASE("sum kernel evaluates its closed form") {
  const auto k = HomogeneousKernel::generalized_sum(0.5);
  CHECK(k.eval(1.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(k.eval(4.0, 1.0) == doctest::Approx(4.5).epsilon(1e-15));
  CHECK(k.eval(2.0, 2.0) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(k.eval_reduced(0.25) == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(k.gamma() == doctest::Approx(0.5));
}

TEST_CASE("sum kernel is homogeneous and symmetric") {
  const auto k = HomogeneousKernel::generalized_sum(0.75);
  const double gamma = k.gamma();
  for (double lambda : {0.1, 2.0, 37.5}) {
    for (double x : {0.2, 1.0, 8.0}) {
      for (double y : {0.5, 3.0}) {
        CHECK(k.eval(lambda * x, lambda * y) ==
              doctest::Approx(std::pow(lambda, gamma) * k.eval(x, y)).epsilon(1e-13));
        CHECK(k.eval(x, y) == doctest::Approx(k.eval(y, x)).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("assumption check reports the minimal singular-envelope constant") {
  // For the sum family the envelope ratio peaks at s = 2 with value 2^(1+a-delta).
  const auto k = HomogeneousKernel::generalized_sum(0.5, 2.0, 0.5);
  const auto checks = k.check_assumptions(64);
  CHECK(checks.passed);
  CHECK(checks.k0_min == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(checks.max_growth_ratio <= checks.k0_min + 1.0);

  // Declaring a too-small K0 must fail the check.
  const auto tight = HomogeneousKernel::generalized_sum(0.5, 1.0, 0.5);
  CHECK_FALSE(tight.check_assumptions(64).passed);
}

TEST_CASE("log-argument evaluation survives exponent ranges doubles cannot") {
  const auto k = HomogeneousKernel::generalized_sum(0.5);
  const ScaledReal huge = k.eval_reduced_log(2000.0);   // K(e^2000, 1) ~ e^2000
  CHECK(huge.log_abs() == doctest::Approx(2000.0).epsilon(1e-12));
  const ScaledReal tiny_arg = k.eval_reduced_log(-2000.0);  // ~ e^(+1000) from the s^-a branch
  CHECK(tiny_arg.log_abs() == doctest::Approx(1000.0).epsilon(1e-12));
  // Within double range it matches eval_reduced.
  CHECK(k.eval_reduced_log(0.7).to_double() ==
        doctest::Approx(k.eval_reduced(std::exp(0.7))).epsilon(1e-14));
}

TEST_CASE("table kernels reproduce the sampled kernel and extend by power laws") {
  const auto exact = HomogeneousKernel::generalized_sum(0.5);
  std::vector<double> log_s, log_k;
  const int n = 4000;
  for (int i = 0; i <= n; ++i) {
    const double t = -12.0 + 24.0 * i / n;
    log_s.push_back(t);
    log_k.push_back(std::log(exact.eval_reduced(std::exp(t))));
  }
  // Interpolation error makes the envelope ratio land epsilon above the exact
  // constant 2, so the declared K0 carries a little headroom.
  const auto table = HomogeneousKernel::user_table(0.5, log_s, log_k, 2.001, 0.5);

  for (double s : {1e-4, 0.03, 0.9, 1.0, 7.5, 2.0e4}) {
    CHECK(table.eval_reduced(s) == doctest::Approx(exact.eval_reduced(s)).epsilon(2e-6));
  }
  for (double x : {0.4, 2.0}) {
    for (double y : {0.1, 5.0}) {
      CHECK(table.eval(x, y) == doctest::Approx(exact.eval(x, y)).epsilon(2e-6));
    }
  }
  // Beyond the tabulated range the continuation follows the asymptote shapes.
  CHECK(table.eval_reduced(std::exp(-15.0)) ==
        doctest::Approx(std::exp(15.0 * 0.5) * (1.0 + std::exp(-15.0 * 1.5))).epsilon(1e-6));
  CHECK(table.eval_reduced(std::exp(14.0)) ==
        doctest::Approx(std::exp(14.0) * (1.0 + std::exp(-14.0 * 1.5))).epsilon(1e-6));
  CHECK(table.check_assumptions(32).passed);
}

TEST_CASE("kernel json round-trips both forms") {
  const auto sum = HomogeneousKernel::generalized_sum(0.25, 3.0, 0.125);
  const auto sum2 = HomogeneousKernel::from_json(sum.to_json());
  CHECK(sum2.a() == sum.a());
  CHECK(sum2.k0() == sum.k0());
  CHECK(sum2.delta() == sum.delta());
  CHECK(sum2.eval(3.0, 0.7) == sum.eval(3.0, 0.7));

  const auto table = HomogeneousKernel::user_table(
      0.5, {-2.0, -1.0, 0.0, 1.0, 2.0}, {1.0, 0.55, 0.693, 1.35, 2.1});
  const auto table2 = HomogeneousKernel::from_json(table.to_json());
  CHECK(table2.eval_reduced(1.3) == table.eval_reduced(1.3));

  // gamma may be given instead of a.
  const auto from_gamma = HomogeneousKernel::from_json(nlohmann::json{{"gamma", 0.5}});
  CHECK(from_gamma.a() == doctest::Approx(0.5));
  CHECK_THROWS_AS(HomogeneousKernel::from_json(nlohmann::json{{"form", "user_table"}, {"a", 0.5}}),
                  Error);
}
