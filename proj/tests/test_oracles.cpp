#include <doctest.h>

#include <coagprofile/grid.hpp>

#include <cmath>

#include "oracles.hpp"

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;

/// Single Gaussian bump; every oracle functional of it that only involves
/// exponential weights has a closed form through the Gaussian moment
/// integral E(kappa) = mass * exp(-kappa mu + kappa^2 sigma^2 / 2).
struct GaussianCase {
  double c = 0.8, mu = 0.5, sigma = 0.6;
  oracle::Setup setup;

  GaussianCase() {
    const double cc = c, m = mu, s = sigma;
    setup.h = [cc, m, s](double x) {
      const double t = (x - m) / s;
      return cc * std::exp(-0.5 * t * t);
    };
    const double a = setup.a;
    setup.kernel = [a](double u) { return std::pow(u, -a) + u; };
  }

  double mass() const { return c * sigma * kSqrt2Pi; }
  double exp_moment(double kappa) const {
    return mass() * std::exp(-kappa * mu + 0.5 * kappa * kappa * sigma * sigma);
  }
};

}  // namespace

TEST_CASE("oracle moments and Q match Gaussian closed forms") {
  const GaussianCase gc;
  const oracle::Setup& s = gc.setup;
  const double alpha = s.a / s.rho;
  const double beta = (1.0 + s.a) / s.rho;

  CHECK(oracle::mass(s) == doctest::Approx(gc.mass()).epsilon(1e-9));
  CHECK(oracle::gamma_moment(s) ==
        doctest::Approx(gc.exp_moment(alpha) / s.rho).epsilon(1e-9));

  // For the sum kernel the z-integral splits into two pure exponential
  // moments: Q(y) = mass + e^{beta y} E(beta).
  for (double y : {-1.0, 0.3}) {
    const double closed = gc.mass() + std::exp(beta * y) * gc.exp_moment(beta);
    CHECK(oracle::q_value(s, y) == doctest::Approx(closed).epsilon(1e-9));
  }
}

TEST_CASE("oracle psi matches the cumulative closed form") {
  const GaussianCase gc;
  const oracle::Setup& s = gc.setup;
  const double alpha = s.a / s.rho;
  const double beta = (1.0 + s.a) / s.rho;
  for (double x : {-0.8, 0.2}) {
    const double closed =
        gc.mass() / s.a * (std::exp(-alpha * x) - std::exp(-alpha * s.lrho)) +
        gc.exp_moment(beta) * (std::exp(s.lrho / s.rho) - std::exp(x / s.rho));
    CHECK(oracle::psi_value(s, x) == doctest::Approx(closed).epsilon(1e-8));
  }
  CHECK(oracle::psi_value(s, s.lrho) == 0.0);
}

TEST_CASE("oracle remainder vanishes where the integration region is empty") {
  const GaussianCase gc;
  // Within rho ln 2 of the left support edge the inner interval is empty.
  CHECK(oracle::remainder_value(gc.setup, gc.setup.support_lo + 0.1) == 0.0);
  CHECK(oracle::remainder_value(gc.setup, gc.setup.support_lo - 1.0) == 0.0);
}

TEST_CASE("oracle normalization system solves the zero-profile algebra") {
  oracle::Setup s;
  s.h = [](double) { return 0.0; };
  s.kernel = [](double u) { return std::pow(u, -0.6) + u; };
  const double domain_lo = -8.0;
  const oracle::KSystem ks = oracle::k_system(s, domain_lo);

  const double alpha = s.a / s.rho;
  const double lambda1_closed =
      (std::exp(-alpha * domain_lo) - std::exp(-alpha * s.lrho)) / s.a - 1.0;
  CHECK(ks.lambda2 == doctest::Approx(s.lrho - domain_lo).epsilon(1e-11));
  CHECK(ks.lambda1 == doctest::Approx(lambda1_closed).epsilon(1e-11));
  CHECK(ks.nu1 == 0.0);
  CHECK(ks.nu2 == 0.0);

  // The solved constants must satisfy the linear system itself.
  const double big_l = s.lrho / s.rho;
  const double coupling = std::exp(-s.a * big_l) / ((1.0 + s.rho) * s.a + s.rho);
  CHECK((1.0 + ks.lambda1) * ks.k1 + coupling * ks.k2 ==
        doctest::Approx(1.0 / (1.0 + s.rho)).epsilon(1e-11));
  CHECK(ks.lambda2 * ks.k1 + ks.k2 == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("synthetic cases are admissible and match their stated supports") {
  const auto cases = oracle::make_synthetic_cases(3, 20260819u);
  REQUIRE(cases.size() == 3);
  for (const auto& c : cases) {
    CHECK_NOTHROW(c.weight.validate());
    CHECK(c.setup.lrho == doctest::Approx(c.weight.L * c.weight.rho));
    CHECK(c.setup.a == c.weight.a);
    CHECK(c.setup.rho == c.weight.rho);

    // The profile is sensibly scaled inside, negligible at the truncations.
    CHECK(c.setup.h(0.5) > 1e-6);
    CHECK(std::abs(c.setup.h(c.setup.support_lo)) < 1e-15);
    CHECK(std::abs(c.setup.h(c.setup.support_hi)) < 1e-15);

    const double m = oracle::mass(c.setup);
    CHECK(m > 0.05);
    CHECK(m < 50.0);

    const auto grid = coagprofile::Grid::build(c.weight, c.grid);
    CHECK(grid->x_min() == c.setup.support_lo);
    CHECK(grid->x_max() == c.setup.support_hi);
    for (double y : c.q_probes) CHECK(y <= c.setup.lrho);
  }
}
