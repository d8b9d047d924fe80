#pragma once

#include <functional>
#include <vector>

#include "sigk/augmented.hpp"
#include "sigk/grid.hpp"
#include "sigk/report.hpp"

namespace sigk {

/// F = T_{k-1}(A_H) per node. Nodes outside Gamma_k are flagged in `cone_ok` when given.
[[nodiscard]] MatrixField f_field(const AugmentedField& aug, int k, std::vector<char>* cone_ok = nullptr);
[[nodiscard]] MatrixField f_field(const ScalarField& u, const ProblemSpec& spec);

/// Total derivative grad_a H[u] = H_x_a + H_z u_a + sum_m H_xi_m u_am at one node, one matrix per a.
[[nodiscard]] std::vector<Mat> total_derivative_h(const HModel& h, const Vec& x, double z, const Vec& p,
                                                  const Mat& hess);

/// V^j = sum_{p=1}^{k-1} (-1)^{p+1} T_{k-p-1}(A)^{ab} (grad_a H_cb - grad_c H_ab) (A^{p-1})_jc,
/// the exact divergence of F. Needs the positive orientation.
[[nodiscard]] VectorField v_field(const AugmentedField& aug, const ProblemSpec& spec);
/// For H = H2 I: V^j = -(n-k+1) grad_i(H2[u]) T_{k-2}(A)^{ij}.
[[nodiscard]] VectorField v_field_scalar(const AugmentedField& aug, const ProblemSpec& spec);

/// Augmented field whose derivatives come from the closed form.
[[nodiscard]] AugmentedField augment_analytic(const AnalyticField& u, const Grid& grid, const ProblemSpec& spec);

/// max of |div_stencil F - V| over the box minus one coarsest cell, one level per grid size.
[[nodiscard]] CheckReport verify_div_f(const AnalyticField& u, const ProblemSpec& spec,
                                       const std::vector<int>& points_per_axis);

/// Vector test function phi with its gradient d_i phi_j (row i, column j).
struct TestFunction {
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> gradient;
  /// Support is contained in this box.
  Box support;
};

/// Product bump prod_a (1 - s_a^2)^3 on the box shrunk by `margin` on each side, times
/// w_j(x) = 1 + sin(x_j + j)/2.
[[nodiscard]] TestFunction bump_test_function(const Box& box, double margin);

/// int F : grad phi against -int V . phi under refinement, plus the growth bound
/// |V| <= C (1 + |hess u|^{k-1}) with C from the sampled Lipschitz size of H.
[[nodiscard]] CheckReport weak_identity_check(const AnalyticField& u, const ProblemSpec& spec,
                                              const TestFunction& phi, const std::vector<int>& points_per_axis);

/// B(g,h) = int B(a,j) d_a g d_j h against int |div B| |grad g| |h|, (div B)_a = sum_j d_j B(a,j).
[[nodiscard]] CheckReport bilinear_bound_check(const MatrixField& b, const ScalarField& g, const ScalarField& h);

}  // namespace sigk
