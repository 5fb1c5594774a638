#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "coagprofile/grid.hpp"
#include "coagprofile/kernel.hpp"

namespace coagprofile {

/// Scalar diagnostics of one application of the profile map.
struct MapDiagnostics {
  double k1 = 0.0;       ///< left-branch normalization constant
  double k2 = 0.0;       ///< right-branch normalization constant
  double lambda1 = 0.0;  ///< gamma-moment of the left homogeneous solution, minus one
  double lambda2 = 0.0;  ///< mass of the left homogeneous solution
  double nu1 = 0.0;      ///< gamma-moment of the corrected remainder
  double nu2 = 0.0;      ///< mass of the corrected remainder
  double q_max_dev = 0.0;  ///< max |Q - 1| over nodes left of the matching point
  double jump = 0.0;       ///< output branch mismatch at the matching point
};

/// Intermediate fields of one map application, exposed for verification and
/// reporting. All vectors are node-indexed; q and psi are only meaningful up
/// to the matching point (zero beyond it), remainder and corrected carry both
/// one-sided values at the doubled node.
struct MapParts {
  std::vector<double> q;
  std::vector<double> psi;
  std::vector<double> remainder;
  std::vector<double> corrected;
  MapDiagnostics diag;
  GridFunction result;
};

/// The fixed-point map whose fixed points are the self-similar profiles in
/// exponential variables. An application decomposes the defining double
/// integral into explicit exponential-decay terms (with normalization
/// constants solved from the two moment constraints) plus remainder
/// corrections; all node integrals are evaluated with exact per-cell moments
/// of the piecewise-cubic profile model.
///
/// The fast evaluation path relies on the sum-form kernel, whose weighted
/// kernel splits into two pure exponentials; apply/assemble reject other
/// kernel forms. The independent residual evaluation works for any kernel.
class ProfileMap {
 public:
  ProfileMap(HomogeneousKernel kernel, std::shared_ptr<const Grid> grid);

  const Grid& grid() const { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
  const HomogeneousKernel& kernel() const { return kernel_; }

  /// One full application T[h]; diagnostics are filled if requested.
  GridFunction apply(const GridFunction& h, MapDiagnostics* diag = nullptr) const;

  /// One full application keeping every intermediate field.
  MapParts assemble(const GridFunction& h) const;

  /// Right-hand side of the profile equation at x, by direct adaptive
  /// quadrature of the defining double integral over the interpolated
  /// profile. Deliberately avoids the moment tables and the separable-kernel
  /// split, so it is an independent check of an assembled application; works
  /// for any kernel form.
  double equation_rhs_at(const ProfileInterpolant& h, double x, double rel_tol = 1e-9) const;

  /// Weighted equation residual max_i |h(x_i) - rhs(x_i)| e^{-omega(x_i)}
  /// over every stride-th node (plus both branches of the doubled node).
  /// Costs a 2D adaptive quadrature per node. If arg_x is given, it receives
  /// the node where the maximum is attained.
  double weighted_equation_residual(const GridFunction& h, double rel_tol = 1e-9,
                                    std::size_t stride = 1, double* arg_x = nullptr) const;

 private:
  HomogeneousKernel kernel_;
  std::shared_ptr<const Grid> grid_;
};

}  // namespace coagprofile
