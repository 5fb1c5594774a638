#pragma once

#include <array>
#include <functional>

#include "coagprofile/errors.hpp"

namespace coagprofile {

/// Gauss-Legendre nodes/weights on [-1, 1]. The 4-point rule integrates the
/// per-cell (cubic interpolant x gentle exponential) products to ~1e-14 of
/// scale when the exponential varies by less than ~0.1 across the cell; the
/// 8-point rule is used where the exponent budget per cell is larger.
inline constexpr std::array<double, 4> kGl4Nodes = {
    -0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
inline constexpr std::array<double, 4> kGl4Weights = {
    0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};

inline constexpr std::array<double, 8> kGl8Nodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGl8Weights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

/// 4-point Gauss-Legendre integral of f over [a, b].
template <typename F>
double gl4(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) sum += kGl4Weights[i] * f(mid + half * kGl4Nodes[i]);
  return half * sum;
}

/// 8-point Gauss-Legendre integral of f over [a, b].
template <typename F>
double gl8(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < 8; ++i) sum += kGl8Weights[i] * f(mid + half * kGl8Nodes[i]);
  return half * sum;
}

struct QuadratureOptions {
  double rel_tol = 1e-12;   ///< target relative error (vs the integral of |f|-scale)
  double abs_tol = 0.0;     ///< absolute floor; 0 means pure relative control
  int max_intervals = 4096; ///< subdivision budget before QuadratureNoConverge
  bool best_effort = false; ///< on exhausted budget, return the estimate instead of throwing
};

/// Globally adaptive Gauss-Kronrod 15(7) integration over a finite interval.
/// Throws Error(QuadratureNoConverge) if the requested tolerance cannot be
/// certified within the subdivision budget.
double adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                          const QuadratureOptions& opts = {});

/// Integral of f over [lo, +inf) for integrands decaying at least like
/// exp(-decay_rate * (x - lo)) up to slowly varying factors, via the
/// substitution x = lo - log(t)/decay_rate.
double integrate_to_infinity(const std::function<double(double)>& f, double lo,
                             double decay_rate, const QuadratureOptions& opts = {});

}  // namespace coagprofile
