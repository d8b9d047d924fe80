#include "sigk/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "sigk/divstruct.hpp"
#include "sigk/errors.hpp"
#include "sigk/estimates.hpp"
#include "sigk/expr.hpp"
#include "sigk/field_io.hpp"
#include "sigk/gridcalc.hpp"
#include "sigk/moser.hpp"
#include "sigk/sampling.hpp"
#include "sigk/symfun.hpp"

namespace sigk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kCheckNames = {
    "algebraic_identities", "gradient_oracle",       "quotient_chain",       "vh_convergence",
    "verify_div_f",         "weak_identity",         "bilinear_bound",       "admissibility",
    "residual",             "c_sigma",               "concavity_dq",         "i1_pointwise",
    "bochner_identity",     "cancellation_identities", "estimate_probe_I123", "reverse_holder_probe",
    "reverse_holder_stability", "sup_norm_chain",    "f_xi_extension",       "mms_convergence",
    "moser_schedule",
};

std::string error_class(const std::exception& e) {
  if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
  if (dynamic_cast<const ConeViolation*>(&e)) return "ConeViolation";
  if (dynamic_cast<const DomainError*>(&e)) return "DomainError";
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const ThresholdError*>(&e)) return "ThresholdError";
  if (dynamic_cast<const SolverError*>(&e)) return "SolverError";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "std::exception";
}

std::string resolve_path(const std::string& base, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute()) return p;
  return (fs::path(base) / path).string();
}

NewtonOptions newton_options(const json& j) {
  NewtonOptions o;
  if (j.is_null()) return o;
  o.max_iterations = j.value("max_iterations", o.max_iterations);
  o.margin_retention = j.value("margin_retention", o.margin_retention);
  o.max_halvings = j.value("max_halvings", o.max_halvings);
  o.rel_tol = j.value("rel_tol", o.rel_tol);
  o.min_iterations = j.value("min_iterations", o.min_iterations);
  return o;
}

AnalyticField negated(const AnalyticField& u) {
  return {[u](const Vec& x) { return -u.value(x); }, [u](const Vec& x) -> Vec { return -u.gradient(x); },
          [u](const Vec& x) -> Mat { return -u.hessian(x); }};
}

ScalarField negated(const ScalarField& u) {
  std::vector<double> v = u.values();
  for (double& x : v) x = -x;
  return ScalarField(u.grid(), std::move(v));
}

/// Closed form of an expression in x1..xn only.
AnalyticField analytic_from_expression(const std::string& text, int n) {
  const Expr e = Expr::parse(text, n);
  if (e.depends_on({ExprVar::Kind::kZ, 0})) throw ConfigError("field expression may not use z");
  for (int i = 0; i < n; ++i) {
    if (e.depends_on({ExprVar::Kind::kXi, i})) throw ConfigError("field expression may not use xi");
  }
  std::vector<Expr> d1;
  std::vector<Expr> d2;
  for (int a = 0; a < n; ++a) d1.push_back(e.diff({ExprVar::Kind::kX, a}));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) d2.push_back(d1[a].diff({ExprVar::Kind::kX, b}));
  }
  const Vec zero = Vec::Zero(n);
  return {[e, zero](const Vec& x) { return e.eval(x, 0.0, zero); },
          [d1, zero, n](const Vec& x) {
            Vec g(n);
            for (int a = 0; a < n; ++a) g(a) = d1[a].eval(x, 0.0, zero);
            return g;
          },
          [d2, zero, n](const Vec& x) {
            Mat h(n, n);
            for (int a = 0; a < n; ++a) {
              for (int b = 0; b < n; ++b) h(a, b) = d2[a * n + b].eval(x, 0.0, zero);
            }
            return h;
          }};
}

void fill_positive(ProblemContext& ctx, const std::optional<AnalyticField>& analytic) {
  if (ctx.spec.sign == SignCase::kNegative) {
    ctx.positive_spec = negative_to_positive(ctx.spec);
    ctx.positive_field = negated(ctx.field);
    if (analytic) ctx.positive_analytic = negated(*analytic);
  } else {
    ctx.positive_spec = ctx.spec;
    ctx.positive_field = ctx.field;
    ctx.positive_analytic = analytic;
  }
}

ScalarField initial_guess(const ManufacturedSolution& m, const Grid& grid, const json& problem) {
  const std::string init = problem.value("init", "perturbed");
  if (init == "exact") return ScalarField::sample(grid, m.u.value);
  if (init == "perturbed") return perturbed_start(m, grid, problem.value("amplitude", 0.05));
  throw ConfigError("init must be \"exact\" or \"perturbed\", got \"" + init + "\"");
}

/// Helpers for check parameters.
struct Params {
  json j;

  [[nodiscard]] double num(const char* key, double fallback) const {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(std::string("parameter ") + key + " must be a number");
    return j[key].get<double>();
  }
  [[nodiscard]] int integer(const char* key, int fallback) const {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) throw ConfigError(std::string("parameter ") + key + " must be an integer");
    return j[key].get<int>();
  }
  [[nodiscard]] std::vector<int> ints(const char* key, std::vector<int> fallback) const {
    if (!j.contains(key)) return fallback;
    try {
      return j[key].get<std::vector<int>>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("parameter ") + key + " must be an integer array");
    }
  }
  [[nodiscard]] std::vector<double> nums(const char* key, std::vector<double> fallback) const {
    if (!j.contains(key)) return fallback;
    try {
      return j[key].get<std::vector<double>>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("parameter ") + key + " must be a number array");
    }
  }
  [[nodiscard]] std::string str(const char* key, const std::string& fallback) const {
    if (!j.contains(key)) return fallback;
    if (j[key].is_string()) return j[key].get<std::string>();
    if (j[key].is_number()) return j[key].dump();
    throw ConfigError(std::string("parameter ") + key + " must be a string");
  }
};

const ProblemContext& need(const ProblemContext* ctx, const std::string& check) {
  if (!ctx) throw ConfigError("check " + check + " needs a \"problem\" block");
  return *ctx;
}

const AnalyticField& need_analytic(const ProblemContext& ctx, const std::string& check) {
  if (!ctx.positive_analytic) throw ConfigError("check " + check + " needs a closed-form field");
  return *ctx.positive_analytic;
}

EstimateConfig estimate_config(const Params& p, const Grid& g) {
  EstimateConfig c;
  const int n = g.dim();
  c.center = Vec(n);
  double half = std::numeric_limits<double>::infinity();
  double cell = 0.0;
  for (int a = 0; a < n; ++a) {
    c.center(a) = 0.5 * (g.box().lo[a] + g.box().hi[a]);
    half = std::min(half, 0.5 * (g.box().hi[a] - g.box().lo[a]));
    cell = std::max(cell, g.spacing(a));
  }
  if (p.j.contains("center")) {
    const std::vector<double> ctr = p.nums("center", {});
    if (static_cast<int>(ctr.size()) != n) throw ConfigError("center must have n entries");
    for (int a = 0; a < n; ++a) c.center(a) = ctr[a];
  }
  // Keeps B_2R clear of the stencil halo for h up to one cell.
  c.R = p.num("R", 0.45 * (half - 2.0 * cell));
  c.rho = p.num("rho", c.R / 3.0);
  c.q = p.num("q", 4.0);
  c.delta = p.num("delta", 0.0);
  c.h = p.num("h", 0.0);
  return c;
}

ScheduleCase case_param(const Params& p, const ProblemContext& ctx) {
  if (p.j.contains("case")) return schedule_case_from_string(p.str("case", ""));
  return schedule_case_for(ctx.positive_spec, augment(ctx.positive_field, ctx.positive_spec));
}

/// Smallest integer p above the case threshold whose schedule has a positive limit.
Rational default_p(ScheduleCase c, int k, int n) {
  const ScheduleConstants sc = schedule_constants(c, k, n);
  const Rational need_limit = Rational(sc.decrement) / (sc.beta - 1) + sc.decrement;
  const Rational lo = std::max(sc.p_threshold, need_limit);
  return Rational(static_cast<long long>(std::floor(to_double(lo))) + 1);
}

Rational p_param(const Params& p, ScheduleCase c, int k, int n) {
  if (p.j.contains("p")) return parse_rational(p.str("p", ""));
  return default_p(c, k, n);
}

CheckReport failed_report(const std::string& name, const std::exception& e) {
  CheckReport r;
  r.name = name;
  r.reference = "error raised while running the check";
  r.pass = false;
  r.details["error"] = {{"class", error_class(e)}, {"message", e.what()}};
  return r;
}

// Algebraic suites on random Gamma_k matrices.

/// T_k through T_j = sigma_j I - T_{j-1} A, independent of the eigenbasis closed form.
Mat newton_by_recursion(int k, const Mat& a, const Spectrum& s) {
  const int n = static_cast<int>(a.rows());
  Mat t = Mat::Identity(n, n);
  for (int j = 1; j <= k; ++j) t = s.sigma(j) * Mat::Identity(n, n) - t * a;
  return t;
}

CheckReport algebraic_identities(const Params& p, std::uint64_t seed) {
  const int samples = p.integer("samples", 1000);
  const int n_max = p.integer("n_max", 6);
  const double tol = p.num("tolerance", 1e-10);
  if (n_max < 2 || n_max > kMaxDim) throw ConfigError("n_max must lie in [2, 16]");
  MatrixSampler sampler(seed);
  std::uniform_real_distribution<double> h1(-2.0, 2.0);
  CheckReport rep;
  rep.name = "algebraic_identities";
  rep.reference =
      "tr T_k = (n-k) sigma_k, T_{k-1} : A = k sigma_k, T_{k-2} A = -T_{k-1} + tr(T_{k-1})/(n-k+1) I, "
      "2 H1 T_{k-1} : A = 2 H1 k sigma_k";
  json pairs = json::array();
  double worst_all = 0.0;
  for (int n = 2; n <= n_max; ++n) {
    for (int k = 2; k <= n; ++k) {
      double trace = 0.0, euler = 0.0, complement = 0.0, cancel = 0.0, recursion = 0.0;
      for (int s = 0; s < samples; ++s) {
        const SymMat a = sampler.gamma_k(n, k);
        const Spectrum sp(a);
        const Mat& m = a.matrix();
        const double norm = std::max(1.0, sp.values().cwiseAbs().maxCoeff());
        const double scale = binomial(n, k) * std::pow(norm, k);
        const Mat tk = newton_by_recursion(k < n ? k : n - 1, m, sp);
        if (k < n) trace = std::max(trace, std::abs(tk.trace() - (n - k) * sp.sigma(k)) / (n * scale));
        const Mat tk1 = newton_by_recursion(k - 1, m, sp);
        recursion = std::max(recursion, (tk1 - sp.newton_tensor(k - 1)).cwiseAbs().maxCoeff() / scale * norm);
        euler = std::max(euler, std::abs(frobenius(tk1, m) - k * sp.sigma(k)) / (k * scale));
        complement = std::max(complement, newton_complement_identity(k, a) / scale * norm);
        const double c = h1(sampler.engine());
        cancel = std::max(cancel, std::abs(2.0 * c * frobenius(sp.newton_tensor(k - 1), m) -
                                           2.0 * c * k * sp.sigma(k)) /
                                      (2.0 * std::max(1.0, std::abs(c)) * k * scale));
      }
      const double worst = std::max({trace, euler, complement, cancel, recursion});
      worst_all = std::max(worst_all, worst);
      rep.levels.push_back({0.0, worst, tol, worst - tol});
      pairs.push_back({{"n", n},
                       {"k", k},
                       {"trace", trace},
                       {"euler", euler},
                       {"complement", complement},
                       {"cancellation", cancel},
                       {"recursion_vs_eigenbasis", recursion}});
    }
  }
  rep.pass = worst_all <= tol;
  rep.details["pairs"] = pairs;
  rep.details["samples_per_pair"] = samples;
  rep.details["worst_relative_residual"] = worst_all;
  rep.details["tolerance"] = tol;
  return rep;
}

/// d f(A + t E) / dt at t = 0 by central differences, E symmetric with ones at (i, j) and (j, i).
template <class F>
double central_fd(const F& f, const SymMat& a, int i, int j, double step) {
  SymMat plus = a;
  SymMat minus = a;
  plus.set(i, j, a(i, j) + step);
  minus.set(i, j, a(i, j) - step);
  return (f(plus) - f(minus)) / (2.0 * step);
}

/// Largest t with lambda - t (1,...,1) still in the closure of Gamma_k, by bisection.
double diagonal_cone_distance(const Vec& lambda, int k) {
  double lo = 0.0;
  double hi = lambda.maxCoeff() + 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Vec e = elementary_symmetric((lambda.array() - mid).matrix());
    bool inside = true;
    for (int j = 1; j <= k; ++j) inside = inside && e(j) > 0.0;
    (inside ? lo : hi) = mid;
  }
  return lo;
}

CheckReport gradient_oracle(const Params& p, std::uint64_t seed) {
  const int samples = p.integer("samples", 400);
  const int n_max = p.integer("n_max", 6);
  const double step = p.num("step", 1e-5);
  const double tol = p.num("tolerance", 1e-6);
  // Central differences at a fixed step cannot resolve sigma_k^{1/k} closer to the boundary than this.
  const double floor = p.num("cone_distance_floor", 0.02);
  MatrixSampler sampler(seed);
  CheckReport rep;
  rep.name = "gradient_oracle";
  rep.reference = "d sigma_k / dA = T_{k-1}(A) and d sigma_k^{1/k} / dA = T_{k-1} / (k sigma_k^{(k-1)/k})";
  double worst_all = 0.0;
  double near_plain = 0.0, near_richardson = 0.0;
  bool every_pair_sampled = true;
  json pairs = json::array();
  for (int n = 2; n <= n_max; ++n) {
    for (int k = 1; k <= n; ++k) {
      double w_sigma = 0.0, w_root = 0.0;
      int kept = 0;
      for (int s = 0; s < samples; ++s) {
        const SymMat a = sampler.gamma_k(n, k);
        const Spectrum sp(a);
        const bool well = diagonal_cone_distance(sp.values(), k) >= floor * sp.values().cwiseAbs().maxCoeff();
        kept += well ? 1 : 0;
        const SymMat g = grad_sigma(k, a);
        const SymMat g1 = grad_sigma_k1k(k, a);
        const double gs = std::max(g.matrix().cwiseAbs().maxCoeff(), 1e-300);
        const double g1s = std::max(g1.matrix().cwiseAbs().maxCoeff(), 1e-300);
        const auto root = [k](const SymMat& m) { return std::pow(sigma(k, m), 1.0 / k); };
        for (int j = 0; j < n; ++j) {
          for (int i = 0; i <= j; ++i) {
            const double mult = i == j ? 1.0 : 2.0;
            const double fd = central_fd([k](const SymMat& m) { return sigma(k, m); }, a, i, j, step);
            const double fd1 = central_fd(root, a, i, j, step);
            const double e_sigma = std::abs(fd - mult * g(i, j)) / (mult * gs);
            const double e_root = std::abs(fd1 - mult * g1(i, j)) / (mult * g1s);
            if (well) {
              w_sigma = std::max(w_sigma, e_sigma);
              w_root = std::max(w_root, e_root);
            } else {
              const double half = central_fd(root, a, i, j, 0.5 * step);
              near_plain = std::max({near_plain, e_sigma, e_root});
              near_richardson =
                  std::max(near_richardson, std::abs((4.0 * half - fd1) / 3.0 - mult * g1(i, j)) / (mult * g1s));
            }
          }
        }
      }
      every_pair_sampled = every_pair_sampled && kept > 0;
      worst_all = std::max({worst_all, w_sigma, w_root});
      rep.levels.push_back({step, w_sigma, w_root, std::max(w_sigma, w_root)});
      pairs.push_back({{"n", n}, {"k", k}, {"grad_sigma", w_sigma}, {"grad_sigma_k1k", w_root}, {"kept", kept}});
    }
  }
  rep.pass = every_pair_sampled && worst_all <= tol;
  rep.details["pairs"] = pairs;
  rep.details["samples_per_pair"] = samples;
  rep.details["cone_distance_floor"] = floor;
  rep.details["worst_relative_error"] = worst_all;
  rep.details["near_boundary_worst_plain"] = near_plain;
  rep.details["near_boundary_worst_richardson"] = near_richardson;
  rep.details["tolerance"] = tol;
  return rep;
}

CheckReport quotient_chain(const Params& p, std::uint64_t seed) {
  const int samples = p.integer("samples", 1000);
  const int n_max = p.integer("n_max", 6);
  const double tol = p.num("tolerance", 1e-10);
  MatrixSampler sampler(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CheckReport rep;
  rep.name = "quotient_chain";
  rep.reference =
      "T_{j-1}/sigma_j - T_{j-2}/sigma_{j-1} >= 0 for j <= k, and concavity of sigma_k^{1/k} on Gamma_k";
  double worst_chain = std::numeric_limits<double>::infinity();
  double worst_concave = std::numeric_limits<double>::infinity();
  for (int n = 2; n <= n_max; ++n) {
    for (int k = 2; k <= n; ++k) {
      double chain = std::numeric_limits<double>::infinity();
      double concave = std::numeric_limits<double>::infinity();
      for (int s = 0; s < samples; ++s) {
        const SymMat a = sampler.gamma_k(n, k);
        const SymMat b = sampler.gamma_k(n, k);
        chain = std::min(chain, quotient_chain_gap(k, a));
        const double fa = std::pow(sigma(k, a), 1.0 / k);
        const double fb = std::pow(sigma(k, b), 1.0 / k);
        concave = std::min(concave, concavity_probe(k, a, b, unit(sampler.engine())) / std::max({1.0, fa, fb}));
      }
      worst_chain = std::min(worst_chain, chain);
      worst_concave = std::min(worst_concave, concave);
      rep.levels.push_back({0.0, chain, concave, std::min(chain, concave)});
    }
  }
  rep.pass = worst_chain >= -tol && worst_concave >= -tol;
  rep.details["min_chain_gap"] = worst_chain;
  rep.details["min_relative_concavity_gap"] = worst_concave;
  rep.details["samples_per_pair"] = samples;
  rep.details["tolerance"] = tol;
  return rep;
}

// Field checks.

double grid_step(const Grid& g) { return g.min_spacing(); }

CheckReport vh_check(const Params& p, const ProblemContext& ctx) {
  const AnalyticField& u = need_analytic(ctx, "vh_convergence");
  const Grid& g = ctx.positive_field.grid();
  std::vector<double> hs;
  for (int s : p.ints("h_steps", {4, 2, 1})) hs.push_back(s * grid_step(g));
  double s = 2.0;
  if (p.j.contains("s") && p.j["s"].is_string() && p.j["s"] == "inf") {
    s = std::numeric_limits<double>::infinity();
  } else {
    s = p.num("s", 2.0);
  }
  return vh_convergence(u, g, hs, s);
}

CheckReport bilinear_check(const ProblemContext& ctx, const Params& p) {
  const ScalarField& g = ctx.positive_field;
  const Grid& grid = g.grid();
  const int n = grid.dim();
  const double margin = p.num("margin_cells", 3.0) * grid.min_spacing();
  auto bump = [&](const Vec& x) {
    double v = 1.0;
    for (int a = 0; a < n; ++a) {
      const double lo = grid.box().lo[a] + margin;
      const double hi = grid.box().hi[a] - margin;
      const double s = (2.0 * x(a) - lo - hi) / (hi - lo);
      if (std::abs(s) >= 1.0) return 0.0;
      v *= std::pow(1.0 - s * s, 3);
    }
    return v;
  };
  using Entry = std::function<double(const Vec&, std::size_t, int, int)>;
  const std::vector<std::pair<std::string, Entry>> fields = {
      {"linear", [](const Vec& x, std::size_t, int a, int b) { return x(a) - x(b); }},
      {"trigonometric", [](const Vec& x, std::size_t, int a, int b) { return std::sin(x(a) - x(b)); }},
      {"field_coupled",
       [&g](const Vec& x, std::size_t i, int a, int b) { return g[i] * x(a) * x(b) * (x(b) - x(a)); }},
  };
  const ScalarField h = ScalarField::sample(grid, [](const Vec& x) { return 1.0 + 0.5 * std::sin(x.sum()); });
  CheckReport rep;
  rep.name = "bilinear_bound";
  rep.pass = true;
  json per = json::object();
  for (const auto& [label, entry] : fields) {
    MatrixField b(grid, n);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vec x = grid.node(i);
      const double w = bump(x);
      for (int a = 0; a < n; ++a) {
        for (int c = 0; c < n; ++c) b(i, a, c) = a == c ? 0.0 : w * entry(x, i, a, c);
      }
    }
    CheckReport r = bilinear_bound_check(b, g, h);
    rep.reference = r.reference;
    rep.levels.push_back(r.levels.front());
    rep.pass = rep.pass && r.pass;
    per[label] = to_json(r);
  }
  rep.details["fields"] = per;
  return rep;
}

CheckReport admissibility_check(const Params& p, const ProblemContext& ctx) {
  const Grid& g = ctx.field.grid();
  const Region inner = Region::interior(g, p.num("margin_cells", 1.0) * g.min_spacing() * (1.0 - 1e-9));
  const AdmissibilityMap map = admissibility_map(ctx.field, ctx.spec);
  std::size_t failures = 0;
  for (std::size_t i : inner.nodes()) failures += map.admissible[i] ? 0 : 1;
  CheckReport rep;
  rep.name = "admissibility";
  rep.reference = "eigenvalues of the oriented augmented Hessian lie in Gamma_k at every interior node";
  rep.pass = failures == 0;
  rep.details["failures"] = failures;
  rep.details["evaluated_nodes"] = inner.nodes().size();
  rep.details["min_margin"] = map.min_margin(inner);
  return rep;
}

CheckReport residual_check(const Params& p, const ProblemContext& ctx) {
  const Grid& g = ctx.field.grid();
  const Region inner = Region::interior(g, p.num("margin_cells", 1.0) * g.min_spacing() * (1.0 - 1e-9));
  const ResidualField r = residual_field(ctx.field, ctx.spec);
  const double tol = p.num("tolerance", 1e-6);
  CheckReport rep;
  rep.name = "residual";
  rep.reference = "sup-norm of sigma_k^{1/k}(A_H[u]) - f[u] over interior nodes";
  const double m = r.max_abs(inner);
  rep.levels.push_back({g.min_spacing(), m, tol, m - tol});
  rep.pass = r.failures(inner) == 0 && m <= tol;
  rep.details["cone_failures"] = r.failures(inner);
  rep.details["tolerance"] = tol;
  return rep;
}

CheckReport c_sigma_probe(const Params& p, const ProblemContext& ctx) {
  const Grid& g = ctx.positive_field.grid();
  EvalBox box;
  if (ctx.positive_spec.sigma_set) {
    box = *ctx.positive_spec.sigma_set;
  } else {
    box = eval_box_for(augment(ctx.positive_field, ctx.positive_spec), Region::interior(g, g.min_spacing()));
  }
  const CSigma cs = compute_c_sigma(ctx.positive_spec.h, box, p.integer("points_per_axis", 9));
  CheckReport rep;
  rep.name = "c_sigma";
  rep.kind = "probe";
  rep.reference = "smallest C with xi -> H + C |xi|^2 I convex on the evaluation box";
  rep.implied_constant = cs.with_safety;
  rep.pass = std::isfinite(cs.with_safety);
  rep.details["sampled"] = cs.sampled;
  rep.details["with_safety"] = cs.with_safety;
  rep.details["samples"] = cs.samples;
  rep.details["eval_box"] = {{"radius", box.radius}, {"z_lo", box.z_lo}, {"z_hi", box.z_hi},
                             {"xi_radius", box.xi_radius}};
  return rep;
}

std::shared_ptr<ScalarModel> h1_model(const Params& p, const ProblemContext& ctx) {
  const int n = ctx.positive_spec.n;
  if (p.j.contains("h1")) return std::make_shared<ExprModel>(Expr::parse(p.str("h1", ""), n), n);
  const HModel hm = ctx.positive_spec.h;
  if (!hm.has_h1()) throw ConfigError("bochner_identity needs an h1 expression for this H model");
  return std::make_shared<FunctionModel>(n, "h1 of " + to_string(hm.variant()),
                                         [hm](const Vec& x, double z, const Vec&) { return hm.h1(x, z); });
}

CheckReport reverse_holder_stability(const Params& p, const ProblemContext& ctx) {
  const std::vector<double> qs = p.nums("qs", {4.0, 4.5, 5.0});
  const double band = p.num("band", 0.2);
  const int pts = ctx.positive_field.grid().points().front();
  const int refined = p.integer("refined_points", 2 * pts - 1);
  const ScheduleCase which = case_param(p, ctx);

  CheckReport rep;
  rep.name = "reverse_holder_stability";
  rep.reference = "implied reverse-Hoelder constant stable across one refinement and a q-sweep";
  std::vector<double> history;
  json runs = json::array();
  const ProblemContext fine = resolve_at(ctx, refined);
  // Balls fixed by the coarse grid on both levels.
  EstimateConfig cfg = estimate_config(p, ctx.positive_field.grid());
  for (const ProblemContext* c : {&ctx, &fine}) {
    for (double q : qs) {
      cfg.q = q;
      const CheckReport r = reverse_holder_probe(c->positive_field, c->positive_spec, cfg, which);
      history.push_back(*r.implied_constant);
      rep.levels.push_back(r.levels.front());
      runs.push_back({{"points", c->positive_field.grid().points().front()}, {"q", q},
                      {"implied_constant", *r.implied_constant}});
    }
  }
  // Refinement axis: same q on both grids. q axis: each grid against its own median.
  const std::size_t m = qs.size();
  double refine_dev = 0.0;
  for (std::size_t i = 0; i < m; ++i) refine_dev = std::max(refine_dev, std::abs(history[m + i] / history[i] - 1.0));
  double q_dev = 0.0;
  double median = 0.0;
  for (std::size_t level = 0; level < 2; ++level) {
    std::vector<double> row(history.begin() + level * m, history.begin() + (level + 1) * m);
    std::sort(row.begin(), row.end());
    const double med = row[m / 2];
    if (level == 0) median = med;
    for (std::size_t i = 0; i < m; ++i) q_dev = std::max(q_dev, std::abs(history[level * m + i] / med - 1.0));
  }
  rep.implied_constant = median;
  rep.pass = std::isfinite(refine_dev) && std::isfinite(q_dev) && refine_dev <= band && q_dev <= band;
  rep.details["implied_constant_history"] = history;
  rep.details["refinement_deviation"] = refine_dev;
  rep.details["q_sweep_deviation"] = q_dev;
  rep.details["band"] = band;
  rep.details["schedule_case"] = to_string(which);
  rep.details["runs"] = runs;
  return rep;
}

CheckReport moser_check(const Params& p, const ProblemContext* ctx) {
  const int k = p.integer("k", ctx ? ctx->positive_spec.k : 2);
  const int n = p.integer("n", ctx ? ctx->positive_spec.n : 3);
  ScheduleCase which = ScheduleCase::kCase1;
  if (p.j.contains("case")) {
    which = schedule_case_from_string(p.str("case", ""));
  } else if (ctx) {
    which = case_param(p, *ctx);
  }
  const MoserSchedule s = moser_schedule(k, n, p_param(p, which, k, n), which);
  const int jmax = p.integer("j_max", 60);
  const double tol = p.num("tolerance", 1e-9);
  bool monotone = true;
  double prev = s.normalized_iterated(0);
  for (int j = 1; j <= jmax; ++j) {
    const double cur = s.normalized_iterated(j);
    monotone = monotone && cur <= prev;
    prev = cur;
  }
  const double gap = std::abs(s.normalized_iterated(jmax) - to_double(s.limit));
  const double closed_gap = std::abs(s.normalized_iterated(jmax) - s.normalized_closed(jmax));
  CheckReport rep;
  rep.name = "moser_schedule";
  rep.reference = "q_0 = p - d, q_j = beta q_{j-1} - d, q_j / beta^j -> q_0 - d / (beta - 1) > 0";
  for (std::size_t j = 0; j < s.q.size(); ++j) {
    rep.levels.push_back({std::pow(3.0, -static_cast<double>(j) - 1.0), s.q[j], to_double(s.constants.beta) * s.q[j],
                          s.normalized_iterated(static_cast<int>(j))});
  }
  rep.pass = s.limit_positive() && monotone && gap <= tol;
  rep.details["schedule"] = to_json(s);
  rep.details["normalized_monotone"] = monotone;
  rep.details["limit_gap_at_j_max"] = gap;
  rep.details["closed_form_gap_at_j_max"] = closed_gap;
  rep.details["j_max"] = jmax;
  return rep;
}

CheckReport dispatch(const CheckRequest& req, const ProblemContext* ctxp, const SuiteConfig& cfg) {
  Params p{cfg.defaults};
  for (auto it = req.overrides.begin(); it != req.overrides.end(); ++it) p.j[it.key()] = it.value();
  const std::string& name = req.name;

  if (name == "algebraic_identities") return algebraic_identities(p, cfg.seed);
  if (name == "gradient_oracle") return gradient_oracle(p, cfg.seed);
  if (name == "quotient_chain") return quotient_chain(p, cfg.seed);
  if (name == "moser_schedule") return moser_check(p, ctxp);

  const ProblemContext& ctx = need(ctxp, name);
  const ScalarField& u = ctx.positive_field;
  const ProblemSpec& spec = ctx.positive_spec;
  const std::vector<int> levels = p.ints("levels", {9, 17, 33});

  if (name == "vh_convergence") return vh_check(p, ctx);
  if (name == "verify_div_f") return verify_div_f(need_analytic(ctx, name), spec, levels);
  if (name == "weak_identity") {
    double width = std::numeric_limits<double>::infinity();
    for (int a = 0; a < spec.n; ++a) width = std::min(width, spec.box.hi[a] - spec.box.lo[a]);
    // Support at least 2.5 coarsest cells away from the faces.
    const double coarse = width / (*std::min_element(levels.begin(), levels.end()) - 1);
    const TestFunction phi = bump_test_function(spec.box, p.num("margin", std::max(0.1 * width, 2.5 * coarse)));
    return weak_identity_check(need_analytic(ctx, name), spec, phi, levels);
  }
  if (name == "bilinear_bound") return bilinear_check(ctx, p);
  if (name == "admissibility") return admissibility_check(p, ctx);
  if (name == "residual") return residual_check(p, ctx);
  if (name == "c_sigma") return c_sigma_probe(p, ctx);
  if (name == "concavity_dq") return concavity_dq_check(u, spec, estimate_config(p, u.grid()));
  if (name == "i1_pointwise") return i1_pointwise_bound(u, spec, estimate_config(p, u.grid()));
  if (name == "bochner_identity") {
    const auto h1 = h1_model(p, ctx);
    const int axis = p.integer("axis", 0);
    if (axis < 0 || axis >= spec.n) throw ConfigError("axis out of range");
    const Increment inc = Increment::make(u.grid(), axis, p.integer("steps", 1) * u.grid().spacing(axis));
    return bochner_identity_check(u, *h1, inc);
  }
  if (name == "cancellation_identities") return cancellation_identity_checks(u, spec);
  if (name == "estimate_probe_I123") return estimate_probe_I123(u, spec, estimate_config(p, u.grid()));
  if (name == "reverse_holder_probe") {
    return reverse_holder_probe(u, spec, estimate_config(p, u.grid()), case_param(p, ctx));
  }
  if (name == "reverse_holder_stability") return reverse_holder_stability(p, ctx);
  if (name == "sup_norm_chain") {
    const ScheduleCase which = case_param(p, ctx);
    const MoserSchedule s = moser_schedule(spec.k, spec.n, p_param(p, which, spec.k, spec.n), which);
    return sup_norm_chain(u, spec, s, estimate_config(p, u.grid()));
  }
  if (name == "f_xi_extension") return f_xi_extension_check(u, spec, estimate_config(p, u.grid()));
  if (name == "mms_convergence") {
    if (!ctx.manufactured) throw ConfigError("mms_convergence needs a manufactured problem");
    MmsOptions o;
    o.newton = newton_options(ctx.source.value("newton", json()));
    o.start_amplitude = p.num("amplitude", o.start_amplitude);
    o.estimate_checks = p.j.value("estimate_checks", true);
    return mms_convergence(ctx.manufactured->name, ctx.spec.n, ctx.spec.k, ctx.spec.box, levels, o);
  }
  throw ConfigError("unknown check: " + name);
}

std::string csv_number(double x) {
  if (!std::isfinite(x)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::string unique_stem(std::map<std::string, int>& seen, const std::string& name) {
  const int c = ++seen[name];
  return c == 1 ? name : name + "_" + std::to_string(c);
}

json environment_of(const SuiteConfig& cfg, const ProblemContext* ctx) {
  json env;
  env["version"] = kVersion;
  env["seed"] = cfg.seed;
  if (ctx) {
    env["n"] = ctx->spec.n;
    env["k"] = ctx->spec.k;
    env["grid_points"] = ctx->field.grid().points();
    env["field_source"] = ctx->field_source;
    env["sign_case"] = to_string(ctx->spec.sign);
  }
  return env;
}

int report_config_error(const std::exception& e) {
  std::cerr << "config error (" << error_class(e) << "): " << e.what() << "\n";
  return kExitConfigError;
}

std::optional<ProblemContext> problem_of(const SuiteConfig& cfg) {
  if (cfg.problem.is_null()) return std::nullopt;
  return resolve_problem(cfg.problem, cfg.base_dir);
}

}  // namespace

const std::vector<std::string>& check_names() { return kCheckNames; }

SuiteConfig parse_suite_config(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known = {"problem", "checks", "output", "seed",
                                                 "defaults", "sweep",  "solve"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError("unknown config key: " + it.key());
    }
  }
  SuiteConfig c;
  c.base_dir = base_dir;
  c.problem = j.value("problem", json());
  c.output_dir = j.value("output", c.output_dir);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0) {
      throw ConfigError("seed must be a nonnegative integer");
    }
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.defaults = j.value("defaults", json::object());
  if (!c.defaults.is_object()) throw ConfigError("defaults must be an object");
  c.sweep = j.value("sweep", json());
  c.solve = j.value("solve", json());
  if (j.contains("checks")) {
    if (!j["checks"].is_array()) throw ConfigError("checks must be an array");
    for (const json& e : j["checks"]) {
      CheckRequest r;
      if (e.is_string()) {
        r.name = e.get<std::string>();
      } else if (e.is_object() && e.contains("name") && e["name"].is_string()) {
        r.name = e["name"].get<std::string>();
        for (auto it = e.begin(); it != e.end(); ++it) {
          if (it.key() != "name" && it.key() != "overrides") {
            throw ConfigError("check " + r.name + ": unknown key '" + it.key() + "', parameters go under overrides");
          }
        }
        r.overrides = e.value("overrides", json::object());
        if (!r.overrides.is_object()) throw ConfigError("overrides of " + r.name + " must be an object");
      } else {
        throw ConfigError("each check is a name or {\"name\": ..., \"overrides\": {...}}");
      }
      if (std::find(kCheckNames.begin(), kCheckNames.end(), r.name) == kCheckNames.end()) {
        throw ConfigError("unknown check: " + r.name);
      }
      c.checks.push_back(std::move(r));
    }
  }
  if (const char* env = std::getenv("SIGK_OUTPUT_DIR"); env && *env) c.output_dir = env;
  if (fs::path(c.output_dir).is_relative()) c.output_dir = (fs::path(base_dir) / c.output_dir).string();
  return c;
}

SuiteConfig load_suite_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const fs::path parent = fs::path(path).parent_path();
  return parse_suite_config(j, parent.empty() ? "." : parent.string());
}

ProblemContext resolve_problem(const json& problem, const std::string& base_dir) {
  if (!problem.is_object()) throw ConfigError("problem must be an object");
  try {
    const int points = problem.value("points", 17);
    if (points < 5) throw ConfigError("points must be at least 5");
    if (problem.contains("manufactured")) {
      const std::string name = problem["manufactured"].get<std::string>();
      const int n = problem.value("n", 3);
      const int k = problem.value("k", 2);
      const Box box = problem.contains("box") ? box_from_json(problem["box"], n) : Box::cube(n, -0.5, 0.5);
      ManufacturedSolution m = manufactured(name, n, k, box);
      const Grid grid = Grid::uniform(box, points);
      const std::string source = problem.value("field_source", "exact");
      ScalarField exact = ScalarField::sample(grid, m.u.value);
      std::optional<AnalyticField> analytic = m.u;
      ScalarField field = exact;
      if (source == "solved") {
        field = newton_solve(m.spec, exact, initial_guess(m, grid, problem),
                             newton_options(problem.value("newton", json())))
                    .u;
        analytic.reset();
      } else if (source != "exact") {
        throw ConfigError("field_source must be \"exact\" or \"solved\", got \"" + source + "\"");
      }
      ProblemContext ctx{m.spec, m, field, m.spec, field, std::nullopt, source, problem, base_dir};
      fill_positive(ctx, analytic);
      return ctx;
    }
    if (problem.contains("spec")) {
      const json& sj = problem["spec"];
      const int n = sj.at("n").get<int>();
      const Box box = box_from_json(sj.at("box"), n);
      const BuiltinResolver builtin = [box](const std::string& name, int nn, int kk) {
        return manufactured(name, nn, kk, box).spec.f;
      };
      ProblemSpec spec = spec_from_json(sj, builtin);
      std::optional<AnalyticField> analytic;
      std::optional<ScalarField> field;
      std::string source;
      if (problem.contains("boundary")) {
        const ScalarField boundary = read_field_csv(resolve_path(base_dir, problem["boundary"].get<std::string>()));
        const ScalarField init = problem.contains("init")
                                     ? read_field_csv(resolve_path(base_dir, problem["init"].get<std::string>()))
                                     : boundary;
        field = newton_solve(spec, boundary, init, newton_options(problem.value("newton", json()))).u;
        source = "solved";
      } else if (!problem.contains("field")) {
        throw ConfigError("problem needs \"field\" or \"boundary\"");
      } else if (problem["field"].is_string()) {
        field = read_field_csv(resolve_path(base_dir, problem["field"].get<std::string>()));
        source = "file";
      } else {
        const std::string text = problem["field"].at("expression").get<std::string>();
        analytic = analytic_from_expression(text, n);
        field = ScalarField::sample(Grid::uniform(box, points), analytic->value);
        source = "expression";
      }
      if (field->grid().dim() != n) throw ConfigError("field dimension does not match spec.n");
      ProblemContext ctx{spec, std::nullopt, *field, spec, *field, std::nullopt, source, problem, base_dir};
      fill_positive(ctx, analytic);
      return ctx;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("problem block: ") + e.what());
  }
  throw ConfigError("problem needs \"manufactured\" or \"spec\"");
}

ProblemContext resolve_at(const ProblemContext& ctx, int points) {
  if (ctx.field_source == "file") throw ConfigError("a field read from a file cannot be resampled");
  if (ctx.source.contains("boundary")) throw ConfigError("boundary-file problems cannot be resampled");
  json p = ctx.source;
  p["points"] = points;
  return resolve_problem(p, ctx.base_dir);
}

CheckReport run_check(const CheckRequest& req, const ProblemContext* ctx, const SuiteConfig& cfg) {
  try {
    return dispatch(req, ctx, cfg);
  } catch (const ThresholdError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError("overrides of " + req.name + ": " + e.what());
  } catch (const std::exception& e) {
    return failed_report(req.name, e);
  }
}

bool RunReport::pass() const {
  return std::all_of(reports.begin(), reports.end(),
                     [](const CheckReport& r) { return r.kind != "check" || r.pass; });
}

json RunReport::to_json() const {
  json j;
  j["environment"] = environment;
  j["checks"] = json::array();
  int checks = 0, probes = 0, passed = 0, failed = 0;
  for (const CheckReport& r : reports) {
    j["checks"].push_back(sigk::to_json(r));
    if (r.kind == "check") {
      ++checks;
      (r.pass ? passed : failed) += 1;
    } else {
      ++probes;
    }
  }
  j["summary"] = {{"checks", checks}, {"probes", probes}, {"passed", passed}, {"failed", failed}, {"pass", pass()}};
  return j;
}

std::string levels_csv(const CheckReport& r) {
  std::string out = "h,lhs,rhs,residual\n";
  for (const Level& l : r.levels) {
    out += csv_number(l.h) + "," + csv_number(l.lhs) + "," + csv_number(l.rhs) + "," + csv_number(l.residual) + "\n";
  }
  return out;
}

void write_run(const RunReport& run, const std::string& dir) {
  fs::create_directories(dir);
  write_text(fs::path(dir) / "run.json", run.to_json().dump(2) + "\n");
  std::map<std::string, int> seen;
  for (const CheckReport& r : run.reports) {
    write_text(fs::path(dir) / (unique_stem(seen, r.name) + ".csv"), levels_csv(r));
  }
}

int cli_verify(const std::string& config_path) {
  SuiteConfig cfg;
  std::optional<ProblemContext> ctx;
  try {
    cfg = load_suite_config(config_path);
    if (cfg.checks.empty()) throw ConfigError("no checks selected");
    ctx = problem_of(cfg);
  } catch (const ConfigError& e) {
    return report_config_error(e);
  } catch (const DomainError& e) {
    return report_config_error(e);
  } catch (const DimensionError& e) {
    return report_config_error(e);
  } catch (const Error& e) {
    std::cerr << "problem setup failed (" << error_class(e) << "): " << e.what() << "\n";
    return kExitCheckFailure;
  }

  RunReport run;
  run.environment = environment_of(cfg, ctx ? &*ctx : nullptr);
  int code = kExitPass;
  for (const CheckRequest& req : cfg.checks) {
    try {
      CheckReport r = run_check(req, ctx ? &*ctx : nullptr, cfg);
      r.name = req.name;
      run.reports.push_back(std::move(r));
    } catch (const ThresholdError& e) {
      std::cerr << "threshold gate refused " << req.name << ": " << e.what() << "\n";
      code = kExitThreshold;
      break;
    } catch (const ConfigError& e) {
      std::cerr << "config error in " << req.name << ": " << e.what() << "\n";
      return kExitConfigError;
    }
  }
  write_run(run, cfg.output_dir);
  for (const CheckReport& r : run.reports) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.kind << " " << r.name;
    if (r.details.contains("error")) std::cout << " [" << r.details["error"]["class"].get<std::string>() << ": "
                                               << r.details["error"]["message"].get<std::string>() << "]";
    std::cout << "\n";
  }
  if (code != kExitPass) return code;
  return run.pass() ? kExitPass : kExitCheckFailure;
}

int cli_solve(const std::string& config_path) {
  SuiteConfig cfg;
  try {
    cfg = load_suite_config(config_path);
    if (!cfg.problem.is_object()) throw ConfigError("solve needs a \"problem\" block");
  } catch (const ConfigError& e) {
    return report_config_error(e);
  }
  const json& problem = cfg.problem;
  const json solve = cfg.solve.is_null() ? json::object() : cfg.solve;
  ProblemSpec spec;
  std::optional<ScalarField> boundary, init;
  std::optional<ManufacturedSolution> m;
  try {
    const NewtonOptions opts = newton_options(solve.value("newton", json()));
    if (problem.contains("manufactured")) {
      const int n = problem.value("n", 3);
      const int k = problem.value("k", 2);
      const Box box = problem.contains("box") ? box_from_json(problem["box"], n) : Box::cube(n, -0.5, 0.5);
      m = manufactured(problem["manufactured"].get<std::string>(), n, k, box);
      const Grid grid = Grid::uniform(box, problem.value("points", 17));
      spec = m->spec;
      boundary = ScalarField::sample(grid, m->u.value);
      init = initial_guess(*m, grid, problem);
    } else if (problem.contains("spec")) {
      const json& sj = problem["spec"];
      const int n = sj.at("n").get<int>();
      const Box box = box_from_json(sj.at("box"), n);
      spec = spec_from_json(sj, [box](const std::string& name, int nn, int kk) {
        return manufactured(name, nn, kk, box).spec.f;
      });
      if (!problem.contains("boundary")) throw ConfigError("solve needs a \"boundary\" field file");
      boundary = read_field_csv(resolve_path(cfg.base_dir, problem["boundary"].get<std::string>()));
      init = problem.contains("init") ? read_field_csv(resolve_path(cfg.base_dir, problem["init"].get<std::string>()))
                                      : *boundary;
    } else {
      throw ConfigError("problem needs \"manufactured\" or \"spec\"");
    }
    const SolveResult r = newton_solve(spec, *boundary, *init, opts);
    fs::create_directories(cfg.output_dir);
    write_field_csv((fs::path(cfg.output_dir) / "solution.csv").string(), r.u);
    write_field_sidecar((fs::path(cfg.output_dir) / "solution.json").string(), r.u,
                        std::string("damped Newton solve, ") + (m ? m->name : "spec problem"));
    json sj = to_json(r);
    if (m) {
      double err = 0.0;
      const Grid& g = r.u.grid();
      for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(r.u[i] - m->u.value(g.node(i))));
      sj["max_error_vs_exact"] = err;
    }
    write_text(fs::path(cfg.output_dir) / "solve.json", sj.dump(2) + "\n");
    std::cout << "converged in " << r.iterations() << " Newton iteration(s), residual "
              << csv_number(r.residuals.back()) << "\n";

    if (solve.contains("mms")) {
      if (!m) throw ConfigError("mms needs a manufactured problem");
      MmsOptions o;
      o.newton = opts;
      const std::vector<int> levels = solve["mms"].value("levels", std::vector<int>{9, 17, 33});
      RunReport run;
      run.environment = {{"version", kVersion}, {"seed", cfg.seed}, {"n", spec.n}, {"k", spec.k},
                         {"levels", levels}};
      run.reports.push_back(mms_convergence(m->name, spec.n, spec.k, spec.box, levels, o));
      write_run(run, cfg.output_dir);
      const CheckReport& rep = run.reports.front();
      std::cout << "h,error\n";
      for (const Level& l : rep.levels) std::cout << csv_number(l.h) << "," << csv_number(l.residual) << "\n";
      std::cout << "observed order: " << (rep.observed_order ? csv_number(*rep.observed_order) : "exact") << "\n";
      if (!rep.pass) return kExitCheckFailure;
    }
    return r.converged ? kExitPass : kExitCheckFailure;
  } catch (const ConfigError& e) {
    return report_config_error(e);
  } catch (const json::exception& e) {
    return report_config_error(e);
  } catch (const DomainError& e) {
    return report_config_error(e);
  } catch (const DimensionError& e) {
    return report_config_error(e);
  } catch (const Error& e) {
    std::cerr << "solve failed (" << error_class(e) << "): " << e.what() << "\n";
    return kExitCheckFailure;
  }
}

int cli_moser(int k, int n, const std::string& p, const std::string& which) {
  MoserSchedule s;
  try {
    s = moser_schedule(k, n, parse_rational(p), schedule_case_from_string(which));
  } catch (const ThresholdError& e) {
    std::cerr << "threshold gate: " << e.what() << "\n";
    return kExitThreshold;
  } catch (const Error& e) {
    return report_config_error(e);
  }
  const double beta = to_double(s.constants.beta);
  std::cout << "case " << to_string(s.which) << ", beta = " << to_string(s.constants.beta) << ", theta = "
            << to_string(s.constants.theta) << ", d = " << s.constants.decrement << ", q0 = " << to_string(s.q0)
            << ", limit = " << to_string(s.limit) << " (" << csv_number(to_double(s.limit)) << ")\n";
  std::cout << "j,q_j,beta_q_j,radius_factor\n";
  for (std::size_t j = 0; j < s.q.size(); ++j) {
    std::cout << j << "," << csv_number(s.q[j]) << "," << csv_number(beta * s.q[j]) << ","
              << csv_number(std::pow(3.0, -static_cast<double>(j) - 1.0)) << "\n";
  }
  if (!s.limit_positive()) {
    std::cerr << "limit exponent q0 - d/(beta - 1) = " << to_string(s.limit) << " is not positive\n";
    return kExitThreshold;
  }
  return kExitPass;
}

int cli_sweep(const std::string& config_path, const std::string& axis) {
  SuiteConfig cfg;
  std::optional<ProblemContext> ctx;
  std::string check;
  std::vector<double> values;
  try {
    if (axis != "h" && axis != "q" && axis != "grid") throw ConfigError("axis must be h, q or grid, got " + axis);
    cfg = load_suite_config(config_path);
    if (!cfg.sweep.is_object()) throw ConfigError("sweep needs a \"sweep\" block");
    check = cfg.sweep.at("check").get<std::string>();
    if (std::find(kCheckNames.begin(), kCheckNames.end(), check) == kCheckNames.end()) {
      throw ConfigError("unknown check: " + check);
    }
    values = cfg.sweep.at("values").get<std::vector<double>>();
    if (values.size() < 2) throw ConfigError("a sweep needs at least two values");
    ctx = problem_of(cfg);
  } catch (const json::exception& e) {
    return report_config_error(e);
  } catch (const ConfigError& e) {
    return report_config_error(e);
  } catch (const DomainError& e) {
    return report_config_error(e);
  } catch (const Error& e) {
    std::cerr << "problem setup failed (" << error_class(e) << "): " << e.what() << "\n";
    return kExitCheckFailure;
  }
  const json base = cfg.sweep.value("overrides", json::object());
  static const std::vector<std::string> level_checks = {"verify_div_f", "weak_identity", "mms_convergence"};
  const bool uses_levels = std::find(level_checks.begin(), level_checks.end(), check) != level_checks.end();

  RunReport run;
  run.environment = environment_of(cfg, ctx ? &*ctx : nullptr);
  std::string csv = "axis,value,h,lhs,rhs,residual,implied_constant,pass\n";
  std::vector<Level> rows;
  std::vector<double> implied;
  bool all_pass = true;
  auto emit = [&](double v, const Level& l, double ic, bool pass) {
    rows.push_back(l);
    implied.push_back(ic);
    csv += axis + "," + csv_number(v) + "," + csv_number(l.h) + "," + csv_number(l.lhs) + "," + csv_number(l.rhs) +
           "," + csv_number(l.residual) + "," + csv_number(ic) + "," + (pass ? "true" : "false") + "\n";
  };
  try {
    if (axis == "grid" && uses_levels) {
      // One refinement study; its levels are the rows.
      CheckRequest req{check, base};
      std::vector<int> levels;
      for (double v : values) levels.push_back(static_cast<int>(v));
      req.overrides["levels"] = levels;
      CheckReport r = run_check(req, ctx ? &*ctx : nullptr, cfg);
      r.name = check;
      if (r.levels.size() != values.size()) throw ConfigError(check + " did not report one level per grid size");
      for (std::size_t i = 0; i < values.size(); ++i) {
        emit(values[i], r.levels[i], std::numeric_limits<double>::quiet_NaN(), r.pass);
      }
      all_pass = r.pass;
      run.reports.push_back(std::move(r));
    }
    for (double v : values) {
      if (axis == "grid" && uses_levels) break;
      CheckRequest req{check, base};
      std::optional<ProblemContext> local;
      const ProblemContext* use = ctx ? &*ctx : nullptr;
      if (axis == "q") {
        req.overrides["q"] = v;
      } else if (axis == "h") {
        if (check == "vh_convergence") {
          req.overrides["h_steps"] = std::vector<int>{static_cast<int>(v)};
        } else if (use) {
          req.overrides["h"] = v * use->positive_field.grid().min_spacing();
        }
      } else {
        local = resolve_at(need(use, check), static_cast<int>(v));
        use = &*local;
      }
      CheckReport r = run_check(req, use, cfg);
      r.name = check;
      const Level l = r.levels.empty() ? Level{} : r.levels.back();
      emit(v, l, r.implied_constant.value_or(std::numeric_limits<double>::quiet_NaN()), r.pass);
      all_pass = all_pass && r.pass;
      run.reports.push_back(std::move(r));
    }
  } catch (const ThresholdError& e) {
    std::cerr << "threshold gate refused " << check << ": " << e.what() << "\n";
    return kExitThreshold;
  } catch (const ConfigError& e) {
    return report_config_error(e);
  }

  std::string metric;
  double value = 0.0;
  bool ok = true;
  if (axis == "grid") {
    metric = "min_observed_order";
    const auto order = min_observed_order(rows, 1e-13);
    value = order.value_or(std::numeric_limits<double>::quiet_NaN());
    ok = order && *order >= cfg.sweep.value("min_order", 1.8);
  } else if (axis == "h") {
    metric = "monotone_error";
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      const bool finer = std::abs(rows[i + 1].h) < std::abs(rows[i].h);
      if (finer && rows[i + 1].residual > rows[i].residual) ok = false;
    }
    value = ok ? 1.0 : 0.0;
  } else {
    metric = "max_relative_deviation_from_median";
    std::vector<double> s = implied;
    std::sort(s.begin(), s.end());
    const double med = s[s.size() / 2];
    for (double c : implied) value = std::max(value, std::abs(c / med - 1.0));
    ok = std::isfinite(value) && value <= cfg.sweep.value("band", 0.2);
  }
  csv += "summary," + csv_number(value) + ",,,,,," + (ok ? "true" : "false") + "\n";
  json j = run.to_json();
  j["sweep"] = {{"check", check}, {"axis", axis}, {"values", values}, {"metric", metric}, {"value", value},
                {"pass", ok}};
  fs::create_directories(cfg.output_dir);
  write_text(fs::path(cfg.output_dir) / "run.json", j.dump(2) + "\n");
  write_text(fs::path(cfg.output_dir) / (check + ".csv"), csv);
  std::cout << csv;
  return ok && all_pass ? kExitPass : kExitCheckFailure;
}

}  // namespace sigk
