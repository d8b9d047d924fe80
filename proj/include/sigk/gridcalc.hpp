#pragma once

#include <vector>

#include "sigk/grid.hpp"
#include "sigk/report.hpp"

namespace sigk {

/// Omega_h: nodes at distance >= |h| from the boundary.
[[nodiscard]] Region omega_h(const Grid& grid, double h);

/// u(x + steps * e_axis); zero where that node does not exist.
[[nodiscard]] ScalarField shift(const ScalarField& u, int axis, int steps);
/// (u(x+h e_l) - u(x)) / h, valid wherever x + h e_l is a node (in particular on Omega_h).
[[nodiscard]] ScalarField fdq(const ScalarField& u, const Increment& inc);
/// (u(x+h e_l) - 2u(x) + u(x-h e_l)) / h^2, valid wherever both neighbours exist.
[[nodiscard]] ScalarField sdq(const ScalarField& u, const Increment& inc);
/// Sum of sdq over all axes with the same increment length h.
[[nodiscard]] ScalarField v_h(const ScalarField& u, double h);

/// max over Omega_h of |d(uw) - u(x+h) dw - w du|.
[[nodiscard]] double dq_product_rule_check(const ScalarField& u, const ScalarField& w, const Increment& inc);

/// Weighted discrete L^s norm on the region; s = infinity gives the node max.
[[nodiscard]] double lp_norm(const ScalarField& u, double s, const Region& region);
/// Quadrature of u over the region with compensated summation.
[[nodiscard]] double integrate(const ScalarField& u, const Region& region);

struct NormBound {
  double lhs = 0.0;              // |difference quotient| on Omega_h
  double rhs = 0.0;              // |stencil derivative| on the whole grid
  double rhs_same_region = 0.0;  // |stencil derivative| on Omega_h
  double tol = 0.0;              // 5 x estimated quadrature error
  bool holds = false;
};

[[nodiscard]] NormBound dq_norm_bound_check(const ScalarField& u, const Increment& inc, double s);

/// Error of v_h against the exact Laplacian over a fixed interior region, for a decreasing
/// sequence of grid-aligned h on one grid. Each level also carries the Taylor modulus bound
/// sum_l sum_pm int_0^1 ||d_ll u(. pm t h e_l) - d_ll u||_{L^s} dt in its rhs column.
[[nodiscard]] CheckReport vh_convergence(const AnalyticField& u, const Grid& grid,
                                         const std::vector<double>& hs, double s);

/// d/dx_axis with central differences inside and 2nd-order one-sided ones at the two end nodes.
[[nodiscard]] ScalarField derivative(const ScalarField& u, int axis);
/// d^2/dx_axis^2, central inside and 4-point one-sided at the ends.
[[nodiscard]] ScalarField second_derivative(const ScalarField& u, int axis);
[[nodiscard]] VectorField gradient(const ScalarField& u);
/// Mixed entries are D_a D_b u computed once and mirrored.
[[nodiscard]] MatrixField hessian(const ScalarField& u);
[[nodiscard]] ScalarField laplacian(const ScalarField& u);
/// (div F)_j = sum_i D_i F_ij.
[[nodiscard]] VectorField divergence(const MatrixField& f);

[[nodiscard]] VectorField sample_gradient(const Grid& grid, const AnalyticField& u);
[[nodiscard]] MatrixField sample_hessian(const Grid& grid, const AnalyticField& u);

}  // namespace sigk
