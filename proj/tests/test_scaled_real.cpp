#include <doctest.h>

#include <cmath>
#include <random>

#include "coagprofile/scaled_real.hpp"

using coagprofile::Error;
using coagprofile::ErrorCode;
using coagprofile::ScaledReal;

TEST_CASE("scaled reals round-trip doubles exactly") {
  std::mt19937_64 rng(20240817);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> exp_dist(-300, 300);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::ldexp(mant(rng), exp_dist(rng));
    if (v == 0.0) continue;
    CHECK(ScaledReal::from_double(v).to_double() == v);
  }
}

TEST_CASE("products and sums agree with double arithmetic to 1 ulp") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-100.0, 100.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = dist(rng), b = dist(rng);
    if (a == 0.0 || b == 0.0) continue;
    const double prod = (ScaledReal::from_double(a) * ScaledReal::from_double(b)).to_double();
    CHECK(prod == a * b);  // mantissa product rounds identically
    const double sum = (ScaledReal::from_double(a) + ScaledReal::from_double(b)).to_double();
    CHECK(sum == doctest::Approx(a + b).epsilon(1e-15));
  }
}

TEST_CASE("exp factors far outside double range cancel correctly") {
  const ScaledReal big = ScaledReal::from_exp(4000.25);
  const ScaledReal small = ScaledReal::from_exp(-4000.0);
  const double paired = (big * small).to_double();
  CHECK(paired == doctest::Approx(std::exp(0.25)).epsilon(1e-12));
  CHECK(big.log_abs() == doctest::Approx(4000.25).epsilon(1e-14));

  // In-range exponentials match std::exp closely.
  for (double x : {-700.0, -3.2, 0.0, 1.0, 350.5, 709.0}) {
    CHECK(ScaledReal::from_exp(x).to_double() == doctest::Approx(std::exp(x)).epsilon(1e-13));
  }
}

TEST_CASE("overflowing conversions raise NumericRange instead of saturating") {
  const ScaledReal big = ScaledReal::from_exp(4000.0);
  CHECK_THROWS_AS((void)big.to_double(), Error);
  try {
    (void)big.to_double();
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NumericRange);
  }
  // Underflow flushes to zero rather than erroring.
  CHECK(ScaledReal::from_exp(-4000.0).to_double() == 0.0);
}

TEST_CASE("exponent budget is enforced") {
  CHECK_THROWS_AS((void)ScaledReal::from_pow2(2e6), Error);
  ScaledReal x = ScaledReal::from_pow2(900000.0);
  CHECK_THROWS_AS((void)(x * x), Error);
}

TEST_CASE("signed sums cancel and compare correctly") {
  const ScaledReal a = ScaledReal::from_double(3.5);
  const ScaledReal b = ScaledReal::from_double(-3.5);
  CHECK((a + b).is_zero());
  CHECK((a - a).is_zero());
  CHECK(a.compare_abs(b) == 0);
  CHECK(ScaledReal::from_double(2.0).compare_abs(ScaledReal::from_double(-4.0)) == -1);
  CHECK(ScaledReal::from_exp(10.0).compare_abs(ScaledReal::from_exp(9.0)) == 1);
  CHECK((-a).to_double() == -3.5);
}
