#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sigk/grid.hpp"
#include "sigk/models.hpp"

namespace sigk {

enum class SignCase { kPositive, kNegative, kGeneral };

[[nodiscard]] std::string to_string(SignCase s);

/// Sigma: closed ball in x, a z-interval and a xi-ball.
struct EvalBox {
  Vec center;
  double radius = 0.0;
  double z_lo = 0.0;
  double z_hi = 0.0;
  double xi_radius = 0.0;

  [[nodiscard]] bool contains(const Vec& x, double z, const Vec& xi, double slack = 1e-12) const;
};

/// One instance of sigma_k^{1/k}(A_H[u]) = f(x, u, grad u).
///
/// For SignCase::kNegative the equation is sigma_k^{1/k}(-A_H[u]) = f with u > 0; every field
/// operation below then works with the oriented matrix -A_H.
struct ProblemSpec {
  int n = 3;
  int k = 2;
  Box box;
  ScalarModelPtr f;
  HModel h = HModel::zero(3);
  SignCase sign = SignCase::kPositive;
  std::optional<EvalBox> sigma_set;

  void validate() const;
  [[nodiscard]] double orientation() const { return sign == SignCase::kNegative ? -1.0 : 1.0; }
};

using BuiltinResolver = std::function<ScalarModelPtr(const std::string& name, int n, int k)>;

/// {"lo": a, "hi": b} with numbers or length-n arrays.
[[nodiscard]] Box box_from_json(const nlohmann::json& j, int n);
[[nodiscard]] HModel h_model_from_json(const nlohmann::json& j, int n);
[[nodiscard]] ProblemSpec spec_from_json(const nlohmann::json& j, const BuiltinResolver& builtin = {});
[[nodiscard]] nlohmann::json to_json(const ProblemSpec& spec);

/// u with its derivatives and the oriented augmented Hessian at every node.
struct AugmentedField {
  ScalarField u;
  VectorField grad;
  MatrixField hess;
  MatrixField h;
  MatrixField a;

  [[nodiscard]] const Grid& grid() const { return u.grid(); }
};

/// Derivatives by stencils.
[[nodiscard]] AugmentedField augment(const ScalarField& u, const ProblemSpec& spec);
/// Caller-supplied derivatives (for example sampled from closed forms).
[[nodiscard]] AugmentedField augment(const ScalarField& u, const VectorField& grad, const MatrixField& hess,
                                     const ProblemSpec& spec);

/// grad^2 u - H(x, u, grad u), oriented by the sign case.
[[nodiscard]] MatrixField a_h_field(const ScalarField& u, const ProblemSpec& spec);

struct ResidualField {
  ScalarField value;               // sigma_k^{1/k}(A) - f where admissible, 0 elsewhere
  std::vector<char> admissible;    // cone-failure flag per node
  [[nodiscard]] double max_abs(const Region& region) const;
  [[nodiscard]] std::size_t failures(const Region& region) const;
};

[[nodiscard]] ResidualField residual_field(const AugmentedField& aug, const ProblemSpec& spec);
[[nodiscard]] ResidualField residual_field(const ScalarField& u, const ProblemSpec& spec);

struct AdmissibilityMap {
  std::vector<char> admissible;
  ScalarField margin;  // min_{1<=j<=k} sigma_j(A)
  [[nodiscard]] bool all(const Region& region) const;
  [[nodiscard]] double min_margin(const Region& region) const;
};

[[nodiscard]] AdmissibilityMap admissibility_map(const AugmentedField& aug, int k);
[[nodiscard]] AdmissibilityMap admissibility_map(const ScalarField& u, const ProblemSpec& spec);

/// Smallest C1 >= 0 with Lap u + C1 >= 1 and |hess u|_op <= Lap u + C1 on the region.
/// Throws ConeViolation when A is outside Gamma_2 somewhere on the region.
[[nodiscard]] double compute_c1(const AugmentedField& aug, const Region& region);

struct CSigma {
  double sampled = 0.0;      // max(0, -min curvature / 2) over the samples
  double with_safety = 0.0;  // sampled * 1.25
  std::size_t samples = 0;
};

/// xi-semiconvexity constant of H over Sigma.
[[nodiscard]] CSigma compute_c_sigma(const HModel& h, const EvalBox& box, int points_per_axis = 9);
/// Same for a scalar model (xi-Hessian of f).
[[nodiscard]] CSigma compute_c_sigma(const ScalarModel& f, const EvalBox& box, int points_per_axis = 9);

/// Sigma covering a region: ball around the region, and M = 1.05 * max(|u|, |grad u|) on it.
[[nodiscard]] EvalBox eval_box_for(const AugmentedField& aug, const Region& region);
/// Sample points of Sigma used by compute_c_sigma and the semiconvexity property checks.
[[nodiscard]] std::vector<std::pair<Vec, double>> sigma_base_points(const EvalBox& box, int points_per_axis,
                                                                     const std::function<bool(double)>& z_ok);
[[nodiscard]] std::vector<Vec> sigma_xi_points(const EvalBox& box, int points_per_axis);

/// w = -u and f~(x, z, xi) = f(x, -z, -xi). Throws DomainError if u changes sign or vanishes.
[[nodiscard]] std::pair<ScalarField, ScalarModelPtr> negative_to_positive(const ScalarField& u,
                                                                          const ScalarModelPtr& f);
/// The positive-form problem for w = -u. Supports Zero and PositiveYamabe H.
[[nodiscard]] ProblemSpec negative_to_positive(const ProblemSpec& spec);

}  // namespace sigk
