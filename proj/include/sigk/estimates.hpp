#pragma once

#include <optional>
#include <vector>

#include "sigk/augmented.hpp"
#include "sigk/grid.hpp"
#include "sigk/moser.hpp"
#include "sigk/report.hpp"

namespace sigk {

/// Balls B_R, B_{R+rho}, ..., B_{2R} around `center`, increment h for v = sum_l Delta_ll^h u,
/// exponent q and the optional smoothing delta of (v~+)^2 + delta^2.
struct EstimateConfig {
  Vec center;
  double R = 0.25;
  double rho = 0.25 / 3.0;
  double q = 4.0;
  double delta = 0.0;
  double h = 0.0;  // 0 means one grid step

  /// Throws DimensionError when B_2R leaves the nodes with margin |h| + one cell, or rho > R/3.
  void validate(const Grid& grid) const;
};

/// eta(r) = 1 on [0, R+rho], (1 - ((r-R-rho)/rho)^2)^3 on [R+rho, R+2rho], 0 beyond.
[[nodiscard]] double cutoff(double r, double R, double rho);
/// max |eta'| rho and max(|eta''|, |eta'|/r) rho^2, measured on a fine radial sampling.
struct CutoffBounds {
  double gradient = 0.0;
  double hessian = 0.0;
};
[[nodiscard]] CutoffBounds cutoff_bounds(double R, double rho);

/// Estimate case implied by the lower-order term.
[[nodiscard]] ScheduleCase schedule_case_for(const ProblemSpec& spec, const AugmentedField& aug);

/// Shared per-node quantities for the estimate checks. Positive orientation only.
struct EstimateContext {
  ProblemSpec spec;
  EstimateConfig cfg;
  AugmentedField aug;
  std::vector<Increment> inc;  // one per axis, all of length |h|
  Region inner;                // nodes at distance >= |h| + one cell
  ScalarField v;               // sum_l Delta_ll^h u, valid on inner and its one-cell halo
  double c1 = 0.0;             // on B_2R
  ScalarField vt;              // v + c1
  VectorField grad_vt;         // central stencil
  MatrixField f;               // T_{k-1}(A_H)
  std::vector<char> cone_ok;
  ScalarField lap;             // trace of the stencil Hessian
};

[[nodiscard]] EstimateContext estimate_context(const ScalarField& u, const ProblemSpec& spec,
                                               const EstimateConfig& cfg);

/// Discrete concavity inequality sum_l k f^{k-1} Delta_ll^h f <= F : hess v - sum_l F : Delta_ll^h H with
/// f = sigma_k^{1/k}(A_H) of the stencil matrix, plus the two-sided tangent bound of sigma_k^{1/k}.
[[nodiscard]] CheckReport concavity_dq_check(const ScalarField& u, const ProblemSpec& spec,
                                             const EstimateConfig& cfg);

/// (v~+)^{q-2} F grad v~ . grad v~ >= (4 f^k / q^2) |grad (v~+)^{q/2}|^2 / tr A_H.
[[nodiscard]] CheckReport i1_pointwise_bound(const ScalarField& u, const ProblemSpec& spec,
                                             const EstimateConfig& cfg);

/// Second difference of H1[u] |grad u|^2 against its six-term expansion, with one stencil gradient.
[[nodiscard]] CheckReport bochner_identity_check(const ScalarField& u, const ScalarModel& h1, const Increment& inc);

/// F : A_H = k sigma_k(A_H) and T_{k-2}(A) A = -F + tr(F)/(n-k+1) I at admissible nodes.
[[nodiscard]] CheckReport cancellation_identity_checks(const ScalarField& u, const ProblemSpec& spec);

/// I1, I2, I3, the J ledger and the implied cancellation constant. Asserts I1 >= 0.
[[nodiscard]] CheckReport estimate_probe_I123(const ScalarField& u, const ProblemSpec& spec,
                                              const EstimateConfig& cfg);

/// Lowest admissible q for one reverse-Hoelder step; also the binding one of that and q > 1.
struct QThreshold {
  double value = 0.0;
  bool q_gt_one_binding = false;
};
[[nodiscard]] QThreshold reverse_holder_threshold(ScheduleCase c, int k, int n);
/// Right-hand exponent of the reverse-Hoelder step: q+k-1, q+k or q+2k-1 by case.
[[nodiscard]] double reverse_holder_exponent(ScheduleCase c, int k, double q);

/// (int_{B_{R+rho}} w^{beta q})^{1/beta} against (q/rho^2) int_{B_{R+3rho}} w^{s}, w = Lap u + C1.
/// Throws ThresholdError when q is at or below the case threshold.
[[nodiscard]] CheckReport reverse_holder_probe(const ScalarField& u, const ProblemSpec& spec,
                                               const EstimateConfig& cfg, ScheduleCase c);

/// Nested-ball L^{beta q_j} quantities of w = Lap u + C1 and normalized norms on B_R.
[[nodiscard]] CheckReport sup_norm_chain(const ScalarField& u, const ProblemSpec& spec, const MoserSchedule& schedule,
                                         const EstimateConfig& cfg);

/// Second difference of f(x, u, grad u) against the tangent bound with C_Sigma of f.
[[nodiscard]] CheckReport f_xi_extension_check(const ScalarField& u, const ProblemSpec& spec,
                                               const EstimateConfig& cfg);

/// log of int_region w^s for w > 0, via log-sum-exp with compensated summation.
[[nodiscard]] double log_integral_power(const ScalarField& w, double s, const Region& region);

}  // namespace sigk
