#pragma once

/// Independent reference implementations of the profile-map integrals,
/// computed by direct adaptive quadrature of the defining formulas. They are
/// deliberately naive: no moment tables, no separable-kernel shortcuts, no
/// shared code with the library beyond the generic adaptive integrator.
/// Intended for tests only; costs seconds per value in the nested cases.

#include <functional>
#include <string>
#include <vector>

#include <coagprofile/grid.hpp>

namespace oracle {

/// An analytic profile and kernel in exponential variables. `h` must decay to
/// (numerical) zero outside [support_lo, support_hi]; `kernel` is u -> K(u,1).
/// All quantities are kept in plain doubles, so inputs must keep
/// |y - z| / rho below ~600 across the supports used.
struct Setup {
  std::function<double(double)> h;
  std::function<double(double)> kernel;
  double a = 0.6;
  double rho = 0.35;
  double lrho = 1.0;  ///< matching-point coordinate (L rho)
  double support_lo = -8.0;
  double support_hi = 14.0;
  double rel_tol = 1e-11;
};

/// Mass integral of h over the support.
double mass(const Setup& s);

/// (1/rho) * integral of e^{-(a/rho) x} h.
double gamma_moment(const Setup& s);

/// Q[h](y) = integral over z of e^{(a/rho)(y-z)} K(e^{(y-z)/rho}, 1) h(z).
double q_value(const Setup& s, double y);

/// psi[h](x) = (1/rho) * integral_x^{lrho} e^{-(a/rho) y} Q[h](y) dy.
double psi_value(const Setup& s, double x);

/// Branch selector for the quantities that split at lrho. Auto picks by
/// comparing x with lrho; Left/Right force a branch, which matters exactly at
/// the matching point where both one-sided values exist.
enum class Side { Auto, Left, Right };

/// Remainder R[h](x), both branches (split at lrho).
double remainder_value(const Setup& s, double x, Side side = Side::Auto);

/// Corrected remainder, both branches: R minus the memory integral against
/// the homogeneous solution of each branch's linear part.
double corrected_remainder_value(const Setup& s, double x, Side side = Side::Auto);

/// Right-hand side of the profile equation at x (the full double integral).
double equation_rhs_value(const Setup& s, double x);

/// Normalization system for the two integration constants. The lambda
/// integrals run over [domain_lo, lrho] (matching a truncated computational
/// domain); the nu integrals run over [domain_lo, infinity), using the exact
/// exponential continuation of the corrected remainder past the support.
struct KSystem {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double nu1 = 0.0;
  double nu2 = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
};
KSystem k_system(const Setup& s, double domain_lo);

/// The pure 2x2 solve of the normalization system for given moment integrals:
///   (1 + lambda1) k1 + [e^{-a L} / ((1+rho) a + rho)] k2 = 1/(1+rho) - nu1
///   lambda2 k1 + k2 = 1 - nu2.
KSystem solve_k(double lambda1, double lambda2, double nu1, double nu2, double a,
                double rho, double big_l);

/// A randomized analytic test profile paired with the library-facing grid and
/// weight description that a solver-side evaluation of the same profile would
/// use. The profile is a sum of Gaussians in the weighted variable, tapered by
/// the weight envelope so it lies in the iteration's function space, and the
/// grid truncations coincide with the oracle support so both sides integrate
/// the same function.
struct SyntheticCase {
  std::string name;
  Setup setup;
  coagprofile::WeightSpec weight;
  coagprofile::GridConfig grid;
  std::vector<double> q_probes;    ///< y-points (<= lrho) for Q and psi
  std::vector<double> map_probes;  ///< x-points for R and the corrected R
  std::vector<double> rhs_probes;  ///< x-points for the equation right side
};

/// Deterministic family of randomized cases (same seed, same cases).
std::vector<SyntheticCase> make_synthetic_cases(int count, unsigned seed);

}  // namespace oracle
