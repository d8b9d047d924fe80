#include "sigk/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "sigk/errors.hpp"
#include "sigk/estimates.hpp"
#include "sigk/symfun.hpp"

namespace sigk {

namespace {

constexpr double kPi = std::numbers::pi;

ScalarModelPtr x_only_model(int n, std::string label, std::function<double(const Vec&)> fx) {
  auto value = [fx](const Vec& x, double, const Vec&) { return fx(x); };
  return std::make_shared<FunctionModel>(n, std::move(label), value);
}

bool box_inside_ball(const Box& box, double radius) {
  double far = 0.0;
  for (int a = 0; a < box.dim(); ++a) far += std::pow(std::max(std::abs(box.lo[a]), std::abs(box.hi[a])), 2);
  return std::sqrt(far) <= radius * (1.0 + 1e-12);
}

AnalyticField bubble(int n) {
  AnalyticField u;
  u.value = [](const Vec& x) { return 1.0 + x.squaredNorm(); };
  u.gradient = [](const Vec& x) { return Vec(2.0 * x); };
  u.hessian = [n](const Vec&) { return Mat(2.0 * Mat::Identity(n, n)); };
  return u;
}

/// prod_a sin(pi (x_a - lo_a)/(hi_a - lo_a)) with derivatives.
AnalyticField box_sine(const Box& box) {
  const int n = box.dim();
  auto parts = [box, n](const Vec& x, Vec& s, Vec& c, Vec& w) {
    s.resize(n);
    c.resize(n);
    w.resize(n);
    for (int a = 0; a < n; ++a) {
      w(a) = kPi / (box.hi[a] - box.lo[a]);
      s(a) = std::sin(w(a) * (x(a) - box.lo[a]));
      c(a) = std::cos(w(a) * (x(a) - box.lo[a]));
    }
  };
  auto prod_except = [n](const Vec& s, int i, int j) {
    double p = 1.0;
    for (int a = 0; a < n; ++a) {
      if (a != i && a != j) p *= s(a);
    }
    return p;
  };
  AnalyticField phi;
  phi.value = [=](const Vec& x) {
    Vec s, c, w;
    parts(x, s, c, w);
    return s.prod();
  };
  phi.gradient = [=](const Vec& x) {
    Vec s, c, w;
    parts(x, s, c, w);
    Vec g(n);
    for (int a = 0; a < n; ++a) g(a) = w(a) * c(a) * prod_except(s, a, -1);
    return g;
  };
  phi.hessian = [=](const Vec& x) {
    Vec s, c, w;
    parts(x, s, c, w);
    Mat h(n, n);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        h(a, b) = a == b ? -w(a) * w(a) * s.prod() : w(a) * w(b) * c(a) * c(b) * prod_except(s, a, b);
      }
    }
    return h;
  };
  return phi;
}

double min_cone_margin(const ManufacturedSolution& m, const AnalyticField& u, const Grid& grid) {
  const ProblemSpec& spec = m.spec;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec x = grid.node(i);
    const double z = u.value(x);
    const Vec p = u.gradient(x);
    if (!spec.h.z_admissible(z)) return -1.0;
    const Mat a = spec.orientation() * (u.hessian(x) - spec.h.value(x, z, p));
    worst = std::min(worst, Spectrum(a).cone_margin(spec.k));
  }
  return worst;
}

/// Node data of the discrete operator: central first and second differences.
struct NodeStencil {
  Vec grad;
  Mat hess;
};

NodeStencil stencil_at(const ScalarField& u, std::size_t i) {
  const Grid& g = u.grid();
  const int n = g.dim();
  NodeStencil s{Vec(n), Mat(n, n)};
  for (int a = 0; a < n; ++a) {
    const std::ptrdiff_t sa = g.stride(a);
    const double ha = g.spacing(a);
    s.grad(a) = (u[i + sa] - u[i - sa]) / (2.0 * ha);
    s.hess(a, a) = (u[i + sa] - 2.0 * u[i] + u[i - sa]) / (ha * ha);
    for (int b = a + 1; b < n; ++b) {
      const std::ptrdiff_t sb = g.stride(b);
      const double hb = g.spacing(b);
      const double v = (u[i + sa + sb] - u[i + sa - sb] - u[i - sa + sb] + u[i - sa - sb]) / (4.0 * ha * hb);
      s.hess(a, b) = v;
      s.hess(b, a) = v;
    }
  }
  return s;
}

struct Evaluation {
  double residual = 0.0;
  double margin = 0.0;
  bool admissible = true;
  Eigen::VectorXd value;  // per unknown
};

class DiscreteProblem {
 public:
  DiscreteProblem(const ProblemSpec& spec, const Grid& grid) : spec_(spec), grid_(grid), id_(grid.size(), -1) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid.depth(i) >= 1) {
        id_[i] = static_cast<int>(nodes_.size());
        nodes_.push_back(i);
      }
    }
    if (nodes_.empty()) throw DimensionError("no interior nodes to solve for");
  }

  [[nodiscard]] std::size_t unknowns() const { return nodes_.size(); }
  [[nodiscard]] const std::vector<std::size_t>& nodes() const { return nodes_; }

  [[nodiscard]] Evaluation evaluate(const ScalarField& u) const {
    Evaluation e;
    e.value.resize(static_cast<Eigen::Index>(nodes_.size()));
    e.margin = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < nodes_.size(); ++r) {
      const std::size_t i = nodes_[r];
      const Vec x = grid_.node(i);
      if (!spec_.h.z_admissible(u[i])) {
        e.admissible = false;
        e.margin = -std::numeric_limits<double>::infinity();
        return e;
      }
      const NodeStencil s = stencil_at(u, i);
      const Spectrum sp(Mat(s.hess - spec_.h.value(x, u[i], s.grad)));
      const double m = sp.cone_margin(spec_.k);
      e.margin = std::min(e.margin, m);
      if (!(m > 0.0)) {
        e.admissible = false;
        return e;
      }
      const double v = std::pow(sp.sigma(spec_.k), 1.0 / spec_.k) - spec_.f->value(x, u[i], s.grad);
      e.value(static_cast<Eigen::Index>(r)) = v;
      e.residual = std::max(e.residual, std::abs(v));
    }
    return e;
  }

  /// Jacobian of the discrete residual with respect to the interior values.
  [[nodiscard]] Eigen::SparseMatrix<double> jacobian(const ScalarField& u) const {
    const int n = grid_.dim();
    const int k = spec_.k;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(nodes_.size() * static_cast<std::size_t>(1 + 2 * n + 2 * n * (n - 1)));
    for (std::size_t r = 0; r < nodes_.size(); ++r) {
      const std::size_t i = nodes_[r];
      const Vec x = grid_.node(i);
      const NodeStencil s = stencil_at(u, i);
      const HJet hj = spec_.h.jet(x, u[i], s.grad);
      const Mat a = s.hess - hj.value;
      const Spectrum sp(a);
      const double sk = sp.sigma(k);
      const Mat gm = sp.newton_tensor(k - 1) / (k * std::pow(sk, (k - 1.0) / k));
      const ScalarJet fj = spec_.f->jet(x, u[i], s.grad);

      Vec first(n);
      for (int m = 0; m < n; ++m) first(m) = -frobenius(gm, hj.dxi[m]) - fj.dxi(m);
      const double zeroth = -frobenius(gm, hj.dz) - fj.dz;

      auto add = [&](std::size_t node, double v) {
        const int c = id_[node];
        if (c >= 0 && v != 0.0) trip.emplace_back(static_cast<int>(r), c, v);
      };
      add(i, zeroth);
      for (int a = 0; a < n; ++a) {
        const std::ptrdiff_t sa = grid_.stride(a);
        const double ha = grid_.spacing(a);
        const double caa = gm(a, a) / (ha * ha);
        add(i + sa, caa + first(a) / (2.0 * ha));
        add(i - sa, caa - first(a) / (2.0 * ha));
        add(i, -2.0 * caa);
        for (int b = a + 1; b < n; ++b) {
          const std::ptrdiff_t sb = grid_.stride(b);
          const double cab = 2.0 * gm(a, b) / (4.0 * ha * grid_.spacing(b));
          add(i + sa + sb, cab);
          add(i + sa - sb, -cab);
          add(i - sa + sb, -cab);
          add(i - sa - sb, cab);
        }
      }
    }
    Eigen::SparseMatrix<double> jm(static_cast<Eigen::Index>(nodes_.size()),
                                   static_cast<Eigen::Index>(nodes_.size()));
    jm.setFromTriplets(trip.begin(), trip.end());
    return jm;
  }

 private:
  const ProblemSpec& spec_;
  const Grid& grid_;
  std::vector<int> id_;
  std::vector<std::size_t> nodes_;
};

/// Direct LU for small systems; ILUT-preconditioned BiCGSTAB above that, falling back to LU.
Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& jm, const Eigen::VectorXd& rhs) {
  constexpr Eigen::Index kDirectLimit = 8000;
  if (jm.rows() > kDirectLimit) {
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> it;
    it.preconditioner().setDroptol(1e-2);
    it.preconditioner().setFillfactor(3);
    it.setTolerance(1e-13);
    it.setMaxIterations(2000);
    it.compute(jm);
    if (it.info() == Eigen::Success) {
      Eigen::VectorXd x = it.solve(rhs);
      if (it.info() == Eigen::Success && x.allFinite()) return x;
    }
  }
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(jm);
  if (lu.info() != Eigen::Success) throw SolverError("newton_solve: factorization failed: " + lu.lastErrorMessage());
  Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SolverError("newton_solve: linear solve failed");
  return x;
}

SolveResult solve_positive(const ProblemSpec& spec, const ScalarField& boundary, const ScalarField& init,
                           const NewtonOptions& opts) {
  const Grid& g = init.grid();
  if (!(boundary.grid() == g)) throw DimensionError("boundary and start live on different grids");
  if (g.dim() != spec.n) throw DimensionError("grid dimension does not match the problem");
  const DiscreteProblem prob(spec, g);

  std::vector<double> start = init.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.depth(i) == 0) start[i] = boundary[i];
  }
  SolveResult res{ScalarField(g, std::move(start)), {}, {}, {}, false, 0.0};

  double fmax = 0.0;
  Evaluation cur = prob.evaluate(res.u);
  if (!cur.admissible) throw ConeViolation("newton_solve: start is not admissible at every interior node");
  for (std::size_t i : prob.nodes()) {
    const NodeStencil s = stencil_at(res.u, i);
    fmax = std::max(fmax, std::abs(spec.f->value(g.node(i), res.u[i], s.grad)));
  }
  res.tolerance = opts.rel_tol * std::max(1.0, fmax);
  res.residuals.push_back(cur.residual);
  res.margins.push_back(cur.margin);

  for (int it = 0; it < opts.max_iterations; ++it) {
    if (cur.residual <= res.tolerance && it >= opts.min_iterations) {
      res.converged = true;
      return res;
    }
    const Eigen::VectorXd delta = linear_solve(prob.jacobian(res.u), -cur.value);

    double t = 1.0;
    bool accepted = false;
    for (int tries = 0; tries <= opts.max_halvings; ++tries, t *= 0.5) {
      std::vector<double> trial = res.u.values();
      for (std::size_t r = 0; r < prob.nodes().size(); ++r) trial[prob.nodes()[r]] += t * delta(static_cast<Eigen::Index>(r));
      ScalarField cand(g, std::move(trial));
      Evaluation ev = prob.evaluate(cand);
      if (!ev.admissible || ev.margin < opts.margin_retention * cur.margin) continue;
      if (!(ev.residual < cur.residual || ev.residual <= res.tolerance)) continue;
      res.u = std::move(cand);
      cur = std::move(ev);
      accepted = true;
      break;
    }
    if (!accepted) {
      if (cur.residual <= res.tolerance) {
        res.converged = true;
        return res;
      }
      throw SolverError("newton_solve: line search exhausted at iteration " + std::to_string(it + 1));
    }
    res.steps.push_back(t);
    res.residuals.push_back(cur.residual);
    res.margins.push_back(cur.margin);
  }
  if (cur.residual <= res.tolerance) {
    res.converged = true;
    return res;
  }
  throw SolverError("newton_solve: no convergence within " + std::to_string(opts.max_iterations) + " iterations");
}

ScalarField negated(const ScalarField& u) {
  std::vector<double> v = u.values();
  for (double& x : v) x = -x;
  return ScalarField(u.grid(), std::move(v));
}

}  // namespace

std::vector<std::string> manufactured_names() {
  return {"quadratic-khessian", "bubble-positive", "cap-negative", "perturbed-bubble"};
}

ManufacturedSolution manufactured(const std::string& name, int n, int k, const Box& box) {
  box.validate();
  if (box.dim() != n) throw DimensionError("box dimension does not match n");
  ManufacturedSolution m;
  m.name = name;
  m.spec.n = n;
  m.spec.k = k;
  m.spec.box = box;
  const double ck = std::pow(binomial(n, k), 1.0 / k);

  if (name == "quadratic-khessian") {
    m.u.value = [](const Vec& x) { return 0.5 * x.squaredNorm(); };
    m.u.gradient = [](const Vec& x) { return x; };
    m.u.hessian = [n](const Vec&) { return Mat(Mat::Identity(n, n)); };
    m.laplacian = [n](const Vec&) { return static_cast<double>(n); };
    m.spec.h = HModel::zero(n);
    m.spec.f = ExprModel::constant(ck, n);
    m.valid = [](const Vec&) { return true; };
  } else if (name == "bubble-positive" || name == "perturbed-bubble") {
    m.u = bubble(n);
    m.laplacian = [n](const Vec&) { return 2.0 * n; };
    m.spec.h = HModel::positive_yamabe(n, 0.1);
    m.valid = [](const Vec&) { return true; };
    if (name == "bubble-positive") {
      m.spec.f = x_only_model(n, "2 C(n,k)^{1/k} / (1 + |x|^2)", [ck](const Vec& x) { return 2.0 * ck / (1.0 + x.squaredNorm()); });
    } else {
      const AnalyticField base = m.u;
      const AnalyticField phi = box_sine(box);
      const Grid probe = Grid::uniform(box, 9);
      ManufacturedSolution ref = m;
      const double base_margin = min_cone_margin(ref, base, probe);
      double eps = 0.2;
      AnalyticField u;
      for (int tries = 0; tries < 40; ++tries, eps *= 0.5) {
        u.value = [=](const Vec& x) { return base.value(x) + eps * phi.value(x); };
        u.gradient = [=](const Vec& x) { return Vec(base.gradient(x) + eps * phi.gradient(x)); };
        u.hessian = [=](const Vec& x) { return Mat(base.hessian(x) + eps * phi.hessian(x)); };
        if (min_cone_margin(ref, u, probe) >= 0.5 * base_margin) break;
      }
      m.u = u;
      m.epsilon = eps;
      m.laplacian = [u](const Vec& x) { return u.hessian(x).trace(); };
      const HModel h = m.spec.h;
      m.spec.f = x_only_model(n, "sigma_k^{1/k}(A_H) of the perturbed bubble", [u, h, k](const Vec& x) {
        const Mat a = u.hessian(x) - h.value(x, u.value(x), u.gradient(x));
        return std::pow(std::max(Spectrum(a).sigma(k), 0.0), 1.0 / k);
      });
    }
  } else if (name == "cap-negative") {
    if (!box_inside_ball(box, 1.0)) throw DomainError("cap-negative is defined on the unit ball");
    m.u.value = [](const Vec& x) { return 1.0 - 0.25 * x.squaredNorm(); };
    m.u.gradient = [](const Vec& x) { return Vec(-0.5 * x); };
    m.u.hessian = [n](const Vec&) { return Mat(-0.5 * Mat::Identity(n, n)); };
    m.laplacian = [n](const Vec&) { return -0.5 * n; };
    m.spec.h = HModel::positive_yamabe(n, 0.1);
    m.spec.sign = SignCase::kNegative;
    m.spec.f = x_only_model(n, "C(n,k)^{1/k} (1/2 + |x|^2 / (8 u))", [ck](const Vec& x) {
      const double r2 = x.squaredNorm();
      return ck * (0.5 + r2 / (8.0 * (1.0 - 0.25 * r2)));
    });
    m.valid = [](const Vec& x) { return x.squaredNorm() <= 1.0 + 1e-12; };
  } else {
    throw ConfigError("unknown manufactured solution '" + name + "'");
  }
  m.spec.validate();
  return m;
}

double discrete_residual(const ProblemSpec& spec, const ScalarField& u) {
  if (spec.sign == SignCase::kNegative) {
    const ProblemSpec pos = negative_to_positive(spec);
    return discrete_residual(pos, negated(u));
  }
  const Evaluation e = DiscreteProblem(spec, u.grid()).evaluate(u);
  if (!e.admissible) throw ConeViolation("discrete_residual: field is not admissible");
  return e.residual;
}

SolveResult newton_solve(const ProblemSpec& spec, const ScalarField& boundary, const ScalarField& init,
                         const NewtonOptions& opts) {
  spec.validate();
  if (spec.sign == SignCase::kGeneral) throw ConfigError("newton_solve needs a definite sign case");
  if (spec.sign == SignCase::kNegative) {
    const ProblemSpec pos = negative_to_positive(spec);
    SolveResult r = solve_positive(pos, negated(boundary), negated(init), opts);
    r.u = negated(r.u);
    return r;
  }
  return solve_positive(spec, boundary, init, opts);
}

nlohmann::json to_json(const SolveResult& r) {
  nlohmann::json j;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations();
  j["tolerance"] = r.tolerance;
  j["residuals"] = r.residuals;
  j["margins"] = r.margins;
  j["steps"] = r.steps;
  return j;
}

ScalarField perturbed_start(const ManufacturedSolution& m, const Grid& grid, double amp) {
  const AnalyticField phi = box_sine(grid.box());
  for (int tries = 0; tries < 20; ++tries, amp *= 0.5) {
    ScalarField u = ScalarField::sample(grid, [&](const Vec& x) { return m.u.value(x) + amp * phi.value(x); });
    try {
      (void)discrete_residual(m.spec, u);
      return u;
    } catch (const ConeViolation&) {
    }
  }
  throw ConeViolation("perturbed_start: no admissible perturbation of " + m.name);
}

CheckReport mms_convergence(const std::string& name, int n, int k, const Box& box,
                            const std::vector<int>& points_per_axis, const MmsOptions& opts) {
  if (points_per_axis.size() < 3) throw ConfigError("mms_convergence needs at least three levels");
  const ManufacturedSolution m = manufactured(name, n, k, box);
  CheckReport rep;
  rep.name = "mms_convergence";
  rep.reference = "sup-norm error of the damped Newton solution against a manufactured exact solution";
  rep.details["problem"] = name;
  rep.details["n"] = n;
  rep.details["k"] = k;

  bool admissible_history = true;
  double width = 0.0;
  for (int a = 0; a < n; ++a) width = std::max(width, box.hi[a] - box.lo[a]);
  nlohmann::json runs = nlohmann::json::array();
  double max_error = 0.0;
  std::optional<ScalarField> finest;
  for (int pts : points_per_axis) {
    const Grid g = Grid::uniform(box, pts);
    const ScalarField exact = ScalarField::sample(g, m.u.value);
    const SolveResult sr = newton_solve(m.spec, exact, perturbed_start(m, g, opts.start_amplitude), opts.newton);
    const Region inner = Region::interior(g, 0.25 * width);
    double err = 0.0, err_inner = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double e = std::abs(sr.u[i] - exact[i]);
      err = std::max(err, e);
      if (inner.contains(i)) err_inner = std::max(err_inner, e);
    }
    for (double mg : sr.margins) admissible_history = admissible_history && mg > 0.0;
    max_error = std::max(max_error, err);
    rep.levels.push_back({g.spacing(0), err_inner, err, err});
    runs.push_back({{"points", pts}, {"solve", to_json(sr)}, {"interior_error", err_inner}, {"global_error", err}});
    finest = sr.u;
  }
  rep.details["runs"] = runs;
  rep.details["admissible_iterates"] = admissible_history;

  // Quadratic solutions are reproduced exactly by the central stencils, so their error sits at the
  // solver tolerance on every level and carries no order information.
  const bool exact_case = name == "quadratic-khessian";
  const bool exactly_represented = max_error <= 1e-10;
  rep.details["exactly_represented"] = exactly_represented;
  bool pass = admissible_history;
  if (exact_case || exactly_represented) {
    pass = pass && exactly_represented;
  } else {
    rep.observed_order = min_observed_order(rep.levels, 1e-10);
    pass = pass && rep.observed_order && *rep.observed_order >= 1.8;
  }

  if (opts.estimate_checks && finest) {
    ProblemSpec pos = m.spec;
    ScalarField w = *finest;
    if (m.spec.sign == SignCase::kNegative) {
      pos = negative_to_positive(m.spec);
      w = negated(w);
    }
    const Grid& g = w.grid();
    EstimateConfig cfg;
    cfg.center = Vec(n);
    for (int a = 0; a < n; ++a) cfg.center(a) = 0.5 * (box.lo[a] + box.hi[a]);
    double half = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n; ++a) half = std::min(half, 0.5 * (box.hi[a] - box.lo[a]) - 2.0 * g.spacing(a));
    cfg.R = 0.45 * half;
    cfg.rho = cfg.R / 3.0;
    cfg.q = 4.0;
    nlohmann::json est;
    bool est_pass = true;
    for (const CheckReport& r : {cancellation_identity_checks(w, pos), concavity_dq_check(w, pos, cfg),
                                 i1_pointwise_bound(w, pos, cfg)}) {
      est[r.name] = r.pass;
      est_pass = est_pass && r.pass;
    }
    rep.details["estimate_checks_on_solution"] = est;
    pass = pass && est_pass;
  }
  rep.pass = pass;
  return rep;
}

}  // namespace sigk
