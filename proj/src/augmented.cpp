#include "sigk/augmented.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sigk/errors.hpp"
#include "sigk/gridcalc.hpp"
#include "sigk/symfun.hpp"

namespace sigk {

std::string to_string(SignCase s) {
  switch (s) {
    case SignCase::kPositive: return "positive";
    case SignCase::kNegative: return "negative";
    case SignCase::kGeneral: return "general";
  }
  return "?";
}

bool EvalBox::contains(const Vec& x, double z, const Vec& xi, double slack) const {
  const double tol = slack * std::max(1.0, radius);
  return (x - center).norm() <= radius + tol && z >= z_lo - slack * std::max(1.0, std::abs(z_lo)) &&
         z <= z_hi + slack * std::max(1.0, std::abs(z_hi)) &&
         xi.norm() <= xi_radius + slack * std::max(1.0, xi_radius);
}

void ProblemSpec::validate() const {
  if (n < 3) throw DomainError("equations are posed for n >= 3");
  if (n > kMaxDim) throw DimensionError("n above 16");
  if (k < 2 || k > n) throw DomainError("need 2 <= k <= n");
  if (box.dim() != n) throw DimensionError("box dimension differs from n");
  box.validate();
  if (!f) throw ConfigError("problem has no f model");
  if (f->dim() != n) throw DimensionError("f model dimension differs from n");
  if (h.dim() != n) throw DimensionError("H model dimension differs from n");
  if (sign == SignCase::kNegative && h.variant() != HVariant::kPositiveYamabe &&
      h.variant() != HVariant::kZero) {
    throw ConfigError("negative sign case supports Zero or PositiveYamabe H");
  }
}

namespace {


std::string expr_text(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing parameter '") + key + "'");
  const auto& v = j[key];
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return std::to_string(v.get<double>());
  if (v.is_object() && v.contains("expression")) return v["expression"].get<std::string>();
  throw ConfigError(std::string("parameter '") + key + "' must be an expression string");
}

}  // namespace

Box box_from_json(const nlohmann::json& j, int n) {
  if (!j.is_object() || !j.contains("lo") || !j.contains("hi")) throw ConfigError("box needs lo and hi");
  Box b;
  auto read = [&](const nlohmann::json& v, std::vector<double>& out) {
    if (v.is_number()) {
      out.assign(n, v.get<double>());
    } else if (v.is_array() && static_cast<int>(v.size()) == n) {
      out = v.get<std::vector<double>>();
    } else {
      throw ConfigError("box bound must be a number or an array of length n");
    }
  };
  read(j["lo"], b.lo);
  read(j["hi"], b.hi);
  b.validate();
  return b;
}

HModel h_model_from_json(const nlohmann::json& j, int n) {
  if (!j.is_object() || !j.contains("variant")) throw ConfigError("h_model needs a variant");
  const std::string v = j["variant"].get<std::string>();
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  if (v == "Zero") return HModel::zero(n);
  if (v == "PositiveYamabe") return HModel::positive_yamabe(n, params.value("floor", 0.1));
  if (v == "NegativeYamabe") return HModel::negative_yamabe(n, params.value("floor", 0.1));
  if (v == "ScalarQuadratic") return HModel::scalar_quadratic(n, ExprModel::parse(expr_text(params, "H1"), n));
  if (v == "ScalarGeneral") return HModel::scalar_general(n, ExprModel::parse(expr_text(params, "H2"), n));
  if (v == "GeneralMatrix") {
    if (!params.contains("upper") || !params["upper"].is_array()) {
      throw ConfigError("GeneralMatrix needs params.upper (rows of the upper triangle)");
    }
    std::vector<std::vector<Expr>> upper;
    for (const auto& row : params["upper"]) {
      std::vector<Expr> r;
      for (const auto& cell : row) {
        r.push_back(cell.is_number() ? Expr::constant(cell.get<double>())
                                     : Expr::parse(cell.get<std::string>(), n));
      }
      upper.push_back(std::move(r));
    }
    return HModel::general_matrix(n, upper, params);
  }
  throw ConfigError("unknown H variant '" + v + "'");
}

ProblemSpec spec_from_json(const nlohmann::json& j, const BuiltinResolver& builtin) {
  try {
    ProblemSpec s;
    s.n = j.at("n").get<int>();
    s.k = j.at("k").get<int>();
    if (s.n < 1 || s.n > kMaxDim) throw DomainError("n outside [1, 16]");
    s.box = box_from_json(j.at("box"), s.n);
    const std::string sign = j.value("sign_case", "positive");
    if (sign == "positive") {
      s.sign = SignCase::kPositive;
    } else if (sign == "negative") {
      s.sign = SignCase::kNegative;
    } else if (sign == "general") {
      s.sign = SignCase::kGeneral;
    } else {
      throw ConfigError("sign_case must be positive, negative or general");
    }
    s.h = h_model_from_json(j.value("h_model", nlohmann::json{{"variant", "Zero"}}), s.n);
    const nlohmann::json fm = j.at("f_model");
    if (fm.is_string()) {
      s.f = ExprModel::parse(fm.get<std::string>(), s.n);
    } else if (fm.contains("expression")) {
      s.f = ExprModel::parse(fm["expression"].get<std::string>(), s.n);
    } else if (fm.contains("builtin")) {
      if (!builtin) throw ConfigError("builtin f models are not available here");
      s.f = builtin(fm["builtin"].get<std::string>(), s.n, s.k);
    } else {
      throw ConfigError("f_model needs 'expression' or 'builtin'");
    }
    if (j.contains("eval_box")) {
      const auto& e = j["eval_box"];
      EvalBox b;
      const auto c = e.at("center").get<std::vector<double>>();
      b.center = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
      b.radius = e.at("radius").get<double>();
      b.z_lo = e.at("z_lo").get<double>();
      b.z_hi = e.at("z_hi").get<double>();
      b.xi_radius = e.at("xi_radius").get<double>();
      s.sigma_set = b;
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("problem spec: ") + e.what());
  }
}

nlohmann::json to_json(const ProblemSpec& spec) {
  nlohmann::json j;
  j["n"] = spec.n;
  j["k"] = spec.k;
  j["box"] = {{"lo", spec.box.lo}, {"hi", spec.box.hi}};
  j["sign_case"] = to_string(spec.sign);
  j["h_model"] = spec.h.to_json();
  j["f_model"] = spec.f ? spec.f->to_json() : nlohmann::json(nullptr);
  if (spec.sigma_set) {
    const EvalBox& b = *spec.sigma_set;
    j["eval_box"] = {{"center", std::vector<double>(b.center.data(), b.center.data() + b.center.size())},
                     {"radius", b.radius},
                     {"z_lo", b.z_lo},
                     {"z_hi", b.z_hi},
                     {"xi_radius", b.xi_radius}};
  }
  return j;
}

AugmentedField augment(const ScalarField& u, const VectorField& grad, const MatrixField& hess,
                       const ProblemSpec& spec) {
  const Grid& g = u.grid();
  if (g.dim() != spec.n) throw DimensionError("field dimension differs from the problem's n");
  if (!(grad.grid() == g) || !(hess.grid() == g)) throw DimensionError("derivative fields on another grid");
  AugmentedField out{u, grad, hess, MatrixField(g, spec.n), MatrixField(g, spec.n)};
  const double o = spec.orientation();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.node(i);
    const Vec p = grad.at(i);
    if (spec.sigma_set && !spec.sigma_set->contains(x, u[i], p)) {
      throw DomainError("evaluation outside Sigma at node " + std::to_string(i));
    }
    const Mat h = spec.h.value(x, u[i], p);
    out.h.set(i, h);
    out.a.set(i, o * (hess.at(i) - h));
  }
  return out;
}

AugmentedField augment(const ScalarField& u, const ProblemSpec& spec) {
  return augment(u, gradient(u), hessian(u), spec);
}

MatrixField a_h_field(const ScalarField& u, const ProblemSpec& spec) { return augment(u, spec).a; }

double ResidualField::max_abs(const Region& region) const {
  double m = 0.0;
  for (std::size_t i : region.nodes()) {
    if (admissible[i]) m = std::max(m, std::abs(value[i]));
  }
  return m;
}

std::size_t ResidualField::failures(const Region& region) const {
  std::size_t c = 0;
  for (std::size_t i : region.nodes()) c += admissible[i] ? 0 : 1;
  return c;
}

ResidualField residual_field(const AugmentedField& aug, const ProblemSpec& spec) {
  const Grid& g = aug.grid();
  ResidualField r{ScalarField::zeros(g), std::vector<char>(g.size(), 0)};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Spectrum s(aug.a.at(i));
    if (!s.in_gamma(spec.k)) continue;
    r.admissible[i] = 1;
    r.value[i] = std::pow(s.sigma(spec.k), 1.0 / spec.k) - spec.f->value(g.node(i), aug.u[i], aug.grad.at(i));
  }
  return r;
}

ResidualField residual_field(const ScalarField& u, const ProblemSpec& spec) {
  return residual_field(augment(u, spec), spec);
}

bool AdmissibilityMap::all(const Region& region) const {
  return std::all_of(region.nodes().begin(), region.nodes().end(),
                     [&](std::size_t i) { return admissible[i] != 0; });
}

double AdmissibilityMap::min_margin(const Region& region) const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i : region.nodes()) m = std::min(m, margin[i]);
  return m;
}

AdmissibilityMap admissibility_map(const AugmentedField& aug, int k) {
  const Grid& g = aug.grid();
  AdmissibilityMap m{std::vector<char>(g.size(), 0), ScalarField::zeros(g)};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Spectrum s(aug.a.at(i));
    m.admissible[i] = s.in_gamma(k) ? 1 : 0;
    m.margin[i] = s.cone_margin(k);
  }
  return m;
}

AdmissibilityMap admissibility_map(const ScalarField& u, const ProblemSpec& spec) {
  return admissibility_map(augment(u, spec), spec.k);
}

double compute_c1(const AugmentedField& aug, const Region& region) {
  double c1 = 0.0;
  for (std::size_t i : region.nodes()) {
    if (!Spectrum(aug.a.at(i)).in_gamma(2)) {
      throw ConeViolation("compute_c1: augmented Hessian outside Gamma_2 at node " + std::to_string(i));
    }
    const Mat hs = aug.hess.at(i);
    const double lap = hs.trace();
    const double op = Spectrum(hs).values().cwiseAbs().maxCoeff();
    c1 = std::max({c1, 1.0 - lap, op - lap});
  }
  for (std::size_t i : region.nodes()) {
    const Mat hs = aug.hess.at(i);
    const double lap = hs.trace();
    const double op = Spectrum(hs).values().cwiseAbs().maxCoeff();
    if (!(lap + c1 >= 1.0 - 1e-12) || !(op <= lap + c1 + 1e-12 * std::max(1.0, op))) {
      throw ConeViolation("compute_c1: verification failed at node " + std::to_string(i));
    }
  }
  return c1;
}

std::vector<std::pair<Vec, double>> sigma_base_points(const EvalBox& box, int points_per_axis,
                                                      const std::function<bool(double)>& z_ok) {
  const int n = static_cast<int>(box.center.size());
  std::vector<Vec> xs{box.center};
  for (int a = 0; a < n; ++a) {
    for (int s : {-1, 1}) {
      Vec x = box.center;
      x(a) += s * box.radius;
      xs.push_back(x);
    }
  }
  std::vector<std::pair<Vec, double>> out;
  for (const Vec& x : xs) {
    for (int iz = 0; iz < points_per_axis; ++iz) {
      const double z = box.z_lo + (box.z_hi - box.z_lo) * iz / (points_per_axis - 1);
      if (z_ok(z)) out.emplace_back(x, z);
    }
  }
  return out;
}

std::vector<Vec> sigma_xi_points(const EvalBox& box, int points_per_axis) {
  const int n = static_cast<int>(box.center.size());
  // Full tensor grids in xi get expensive past three dimensions.
  const int p = n <= 3 ? points_per_axis : std::min(points_per_axis, 5);
  std::vector<Vec> out;
  std::vector<int> idx(n, 0);
  for (;;) {
    Vec xi(n);
    for (int a = 0; a < n; ++a) xi(a) = -box.xi_radius + 2.0 * box.xi_radius * idx[a] / (p - 1);
    if (xi.norm() <= box.xi_radius * (1.0 + 1e-12)) out.push_back(xi);
    int a = n - 1;
    while (a >= 0 && ++idx[a] == p) idx[a--] = 0;
    if (a < 0) break;
  }
  return out;
}

CSigma compute_c_sigma(const HModel& h, const EvalBox& box, int points_per_axis) {
  if (points_per_axis < 2) throw DomainError("need at least two samples per axis");
  CSigma c;
  if (h.variant() == HVariant::kZero) return c;
  const auto base = sigma_base_points(box, points_per_axis, [&](double z) { return h.z_admissible(z); });
  if (base.empty()) throw DomainError("Sigma has no z samples inside the H model's domain");
  const auto xis = sigma_xi_points(box, points_per_axis);
  double lmin = 0.0;
  for (const auto& [x, z] : base) {
    for (const Vec& xi : xis) {
      const Eigen::MatrixXd k = h.xi_curvature(x, z, xi);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) throw Error("compute_c_sigma: eigensolver failed");
      lmin = std::min(lmin, es.eigenvalues()(0));
      ++c.samples;
    }
  }
  c.sampled = std::max(0.0, -lmin / 2.0);
  c.with_safety = 1.25 * c.sampled;
  return c;
}

CSigma compute_c_sigma(const ScalarModel& f, const EvalBox& box, int points_per_axis) {
  if (points_per_axis < 2) throw DomainError("need at least two samples per axis");
  CSigma c;
  const auto base = sigma_base_points(box, points_per_axis, [](double) { return true; });
  const auto xis = sigma_xi_points(box, points_per_axis);
  double lmin = 0.0;
  for (const auto& [x, z] : base) {
    for (const Vec& xi : xis) {
      Eigen::SelfAdjointEigenSolver<Mat> es(f.xi_hessian(x, z, xi), Eigen::EigenvaluesOnly);
      lmin = std::min(lmin, es.eigenvalues()(0));
      ++c.samples;
    }
  }
  c.sampled = std::max(0.0, -lmin / 2.0);
  c.with_safety = 1.25 * c.sampled;
  return c;
}

EvalBox eval_box_for(const AugmentedField& aug, const Region& region) {
  const Grid& g = aug.grid();
  if (region.nodes().empty()) throw DomainError("empty region");
  Vec lo = g.node(region.nodes().front());
  Vec hi = lo;
  double m = 0.0;
  double zlo = std::numeric_limits<double>::infinity();
  double zhi = -zlo;
  for (std::size_t i : region.nodes()) {
    const Vec x = g.node(i);
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
    m = std::max({m, std::abs(aug.u[i]), aug.grad.at(i).norm()});
    zlo = std::min(zlo, aug.u[i]);
    zhi = std::max(zhi, aug.u[i]);
  }
  EvalBox b;
  b.center = 0.5 * (lo + hi);
  b.radius = 0.5 * (hi - lo).norm();
  b.z_lo = zlo;
  b.z_hi = zhi;
  b.xi_radius = 1.05 * m;
  return b;
}

std::pair<ScalarField, ScalarModelPtr> negative_to_positive(const ScalarField& u, const ScalarModelPtr& f) {
  const auto [mn, mx] = std::minmax_element(u.values().begin(), u.values().end());
  if (!((*mn > 0.0) || (*mx < 0.0))) {
    throw DomainError("negative_to_positive needs a field bounded away from zero");
  }
  std::vector<double> w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = -u[i];
  ScalarModelPtr g;
  if (auto* r = dynamic_cast<const ReflectedModel*>(f.get())) {
    g = r->inner();
  } else {
    g = std::make_shared<ReflectedModel>(f);
  }
  return {ScalarField(u.grid(), std::move(w)), g};
}

ProblemSpec negative_to_positive(const ProblemSpec& spec) {
  if (spec.sign != SignCase::kNegative) throw ConfigError("problem is not in the negative sign case");
  ProblemSpec out = spec;
  out.sign = SignCase::kPositive;
  out.f = std::make_shared<ReflectedModel>(spec.f);
  if (spec.h.variant() == HVariant::kPositiveYamabe) {
    // -H(x, -z, -xi) is again |xi|^2/(2z) I, now on z <= -floor.
    out.h = HModel::negative_yamabe(spec.n, spec.h.floor());
  } else if (spec.h.variant() != HVariant::kZero) {
    throw ConfigError("negative_to_positive supports Zero and PositiveYamabe H");
  }
  if (spec.sigma_set) {
    EvalBox b = *spec.sigma_set;
    b.z_lo = -spec.sigma_set->z_hi;
    b.z_hi = -spec.sigma_set->z_lo;
    out.sigma_set = b;
  }
  return out;
}

}  // namespace sigk
