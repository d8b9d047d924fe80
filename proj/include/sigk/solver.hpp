#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sigk/augmented.hpp"
#include "sigk/grid.hpp"
#include "sigk/report.hpp"

namespace sigk {

/// Exact pair (u, f) with its problem. `spec` is in the equation's own sign convention.
struct ManufacturedSolution {
  std::string name;
  AnalyticField u;
  std::function<double(const Vec&)> laplacian;
  ProblemSpec spec;
  /// Points where the pair is an admissible exact solution.
  std::function<bool(const Vec&)> valid;
  double epsilon = 0.0;  // perturbation size, perturbed-bubble only
};

[[nodiscard]] std::vector<std::string> manufactured_names();
/// quadratic-khessian, bubble-positive, cap-negative or perturbed-bubble.
/// Throws ConfigError for unknown names and DomainError when the box leaves the validity region.
[[nodiscard]] ManufacturedSolution manufactured(const std::string& name, int n, int k, const Box& box);

struct NewtonOptions {
  int max_iterations = 50;
  double margin_retention = 0.1;  // gamma
  int max_halvings = 30;
  double rel_tol = 1e-9;
  /// Take at least this many Newton steps even when the start already meets the tolerance.
  int min_iterations = 1;
};

struct SolveResult {
  ScalarField u;
  std::vector<double> residuals;  // sup-norm over interior nodes, one per iterate (start included)
  std::vector<double> margins;    // min over interior nodes of min_j sigma_j(A_H)
  std::vector<double> steps;      // accepted damping factor per Newton step
  bool converged = false;
  double tolerance = 0.0;

  [[nodiscard]] int iterations() const { return static_cast<int>(steps.size()); }
};

[[nodiscard]] nlohmann::json to_json(const SolveResult& r);

/// Damped Newton on sigma_k^{1/k}(A_H[u]) - f[u] = 0 at interior nodes, Dirichlet data pinned on the
/// boundary nodes. The negative sign case is solved for w = -u and mapped back.
/// Throws ConeViolation for an inadmissible start and SolverError when the line search, the linear
/// solve or the iteration budget fails.
[[nodiscard]] SolveResult newton_solve(const ProblemSpec& spec, const ScalarField& boundary, const ScalarField& init,
                                       const NewtonOptions& opts = {});

/// Interior residual sup-norm of the discrete equation.
[[nodiscard]] double discrete_residual(const ProblemSpec& spec, const ScalarField& u);

/// Exact solution plus amp * prod_a sin(pi (x_a - lo_a) / (hi_a - lo_a)), which vanishes on the boundary.
/// amp is halved until the start is admissible at every interior node.
[[nodiscard]] ScalarField perturbed_start(const ManufacturedSolution& m, const Grid& grid, double amp = 0.05);

struct MmsOptions {
  NewtonOptions newton;
  double start_amplitude = 0.05;
  /// Run the estimate identity checks on the finest solved field.
  bool estimate_checks = true;
};

/// Sup-norm solve errors per level with observed order. Quadratic data must be exact to 1e-10.
[[nodiscard]] CheckReport mms_convergence(const std::string& name, int n, int k, const Box& box,
                                          const std::vector<int>& points_per_axis, const MmsOptions& opts = {});

}  // namespace sigk
