#include "sigk/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sigk/divstruct.hpp"
#include "sigk/errors.hpp"
#include "sigk/gridcalc.hpp"
#include "sigk/symfun.hpp"

namespace sigk {

namespace {

constexpr double kExcludedFractionLimit = 1e-3;

double increment_length(const Grid& grid, const EstimateConfig& cfg) {
  return cfg.h == 0.0 ? grid.spacing(0) : std::abs(cfg.h);
}

double max_spacing(const Grid& grid) {
  double s = 0.0;
  for (int a = 0; a < grid.dim(); ++a) s = std::max(s, grid.spacing(a));
  return s;
}

double sigma_root(const Spectrum& s, int k) { return std::pow(std::max(s.sigma(k), 0.0), 1.0 / k); }

/// Second difference of a per-node matrix along one increment.
Mat second_difference(const MatrixField& m, std::size_t node, const Increment& inc) {
  const std::ptrdiff_t st = inc.steps * m.grid().stride(inc.axis);
  return (m.at(node + st) - 2.0 * m.at(node) + m.at(node - st)) / (inc.h * inc.h);
}

std::size_t neighbour(const Grid& g, std::size_t node, const Increment& inc, int sign) {
  return node + sign * inc.steps * g.stride(inc.axis);
}

/// Weight (v~+)^{q-2} of the I1 integrand, with the optional delta smoothing.
double i1_weight(double vt, double q, double delta) {
  if (vt <= 0.0) return 0.0;
  if (delta == 0.0) return std::pow(vt, q - 2.0);
  return vt * std::pow(std::hypot(vt, delta), q - 3.0);
}

double i23_weight(double vt, double q, double delta) {
  if (delta == 0.0) return vt > 0.0 ? std::pow(vt, q - 1.0) : 0.0;
  return std::pow(std::hypot(std::max(vt, 0.0), delta), q - 1.0);
}

nlohmann::json config_json(const EstimateConfig& cfg, double h) {
  nlohmann::json j;
  j["R"] = cfg.R;
  j["rho"] = cfg.rho;
  j["q"] = cfg.q;
  j["h"] = h;
  j["delta"] = cfg.delta;
  j["center"] = std::vector<double>(cfg.center.data(), cfg.center.data() + cfg.center.size());
  return j;
}

double integrate_power(const ScalarField& w, double s, const Region& region) {
  CompensatedSum acc;
  for (std::size_t i : region.nodes()) acc.add(region.weight(i) * std::pow(std::max(w[i], 0.0), s));
  return acc.value();
}

}  // namespace

void EstimateConfig::validate(const Grid& grid) const {
  if (center.size() != grid.dim()) throw DimensionError("estimate center dimension mismatch");
  if (!(R > 0.0)) throw ConfigError("R must be positive");
  if (!(rho > 0.0) || rho > R / 3.0 * (1.0 + 1e-12)) throw ConfigError("rho must lie in (0, R/3]");
  if (!(delta >= 0.0)) throw ConfigError("delta must be nonnegative");
  const double h_len = increment_length(grid, *this);
  for (int a = 0; a < grid.dim(); ++a) (void)Increment::make(grid, a, h_len);
  const Region inner = Region::interior(grid, h_len + max_spacing(grid));
  const Region ball = Region::ball(grid, center, 2.0 * R);
  for (std::size_t i : ball.nodes()) {
    if (!inner.contains(i)) {
      throw DimensionError("B_2R reaches nodes closer than |h| + one cell to the boundary");
    }
  }
}

double cutoff(double r, double R, double rho) {
  if (r <= R + rho) return 1.0;
  if (r >= R + 2.0 * rho) return 0.0;
  const double s = (r - R - rho) / rho;
  const double b = 1.0 - s * s;
  return b * b * b;
}

CutoffBounds cutoff_bounds(double R, double rho) {
  // eta = (1 - s^2)^3 with s = (r - R - rho)/rho on the transition shell.
  CutoffBounds out;
  const int samples = 4000;
  for (int i = 0; i <= samples; ++i) {
    const double s = static_cast<double>(i) / samples;
    const double b = 1.0 - s * s;
    const double d1 = -6.0 * s * b * b / rho;
    const double d2 = (-6.0 * b * b + 24.0 * s * s * b) / (rho * rho);
    const double r = R + rho + s * rho;
    out.gradient = std::max(out.gradient, std::abs(d1) * rho);
    out.hessian = std::max(out.hessian, std::max(std::abs(d2), std::abs(d1) / r) * rho * rho);
  }
  return out;
}

ScheduleCase schedule_case_for(const ProblemSpec& spec, const AugmentedField& aug) {
  switch (spec.h.variant()) {
    case HVariant::kZero:
    case HVariant::kPositiveYamabe:
      return ScheduleCase::kCase1;
    case HVariant::kNegativeYamabe:
    case HVariant::kScalarGeneral:
      return ScheduleCase::kCase2;
    case HVariant::kScalarQuadratic: {
      const Grid& g = aug.grid();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (spec.h.h1(g.node(i), aug.u[i]) < 0.0) return ScheduleCase::kCase2;
      }
      return ScheduleCase::kCase1;
    }
    case HVariant::kGeneralMatrix:
      return spec.k == 2 ? ScheduleCase::kK2General : ScheduleCase::kK3General;
  }
  return ScheduleCase::kCase2;
}

EstimateContext estimate_context(const ScalarField& u, const ProblemSpec& spec, const EstimateConfig& cfg) {
  spec.validate();
  if (spec.orientation() != 1.0) {
    throw ConfigError("estimates need the positive form; apply negative_to_positive first");
  }
  const Grid& g = u.grid();
  if (g.dim() != spec.n) throw DimensionError("field dimension does not match the problem");
  cfg.validate(g);
  const double h = increment_length(g, cfg);
  EstimateContext c{spec,
                    cfg,
                    augment(u, spec),
                    {},
                    Region::interior(g, h + max_spacing(g)),
                    v_h(u, h),
                    0.0,
                    ScalarField::zeros(g),
                    VectorField(g, g.dim()),
                    MatrixField(g, g.dim()),
                    {},
                    ScalarField::zeros(g)};
  for (int a = 0; a < g.dim(); ++a) c.inc.push_back(Increment::make(g, a, h));
  c.c1 = compute_c1(c.aug, Region::ball(g, cfg.center, 2.0 * cfg.R));
  for (std::size_t i = 0; i < g.size(); ++i) {
    c.vt[i] = c.v[i] + c.c1;
    c.lap[i] = c.aug.hess.at(i).trace();
  }
  c.grad_vt = gradient(c.vt);
  c.f = f_field(c.aug, spec.k, &c.cone_ok);
  return c;
}

CheckReport concavity_dq_check(const ScalarField& u, const ProblemSpec& spec, const EstimateConfig& cfg) {
  const EstimateContext c = estimate_context(u, spec, cfg);
  const Grid& g = u.grid();
  const int n = spec.n;
  const int k = spec.k;
  const MatrixField hess_v = hessian(c.v);

  CheckReport rep;
  rep.name = "concavity_dq_check";
  rep.reference =
      "sum_l k f^{k-1} Delta_ll^h f[u] <= F^{ij} grad_ij v - sum_l F^{ij} Delta_ll^h H_ij, "
      "and sigma_k^{1/k}(A(x+-h e_l)) - sigma_k^{1/k}(A(x)) <= G^{ij}(A(x+-h e_l) - A(x))_ij";

  std::size_t evaluated = 0, excluded = 0;
  double worst = -std::numeric_limits<double>::infinity();  // max (LHS - RHS) / tol
  double min_margin = std::numeric_limits<double>::infinity();
  double max_lhs = -std::numeric_limits<double>::infinity(), max_rhs = max_lhs, max_gap = max_lhs;
  double tangent_worst = -std::numeric_limits<double>::infinity();
  double model_worst = -std::numeric_limits<double>::infinity();
  bool holds = true, tangent_holds = true;

  for (std::size_t i : c.inner.nodes()) {
    bool ok = c.cone_ok[i] != 0;
    for (const Increment& inc : c.inc) {
      ok = ok && c.cone_ok[neighbour(g, i, inc, 1)] && c.cone_ok[neighbour(g, i, inc, -1)];
    }
    if (!ok) {
      ++excluded;
      continue;
    }
    ++evaluated;
    const Mat a = c.aug.a.at(i);
    const Spectrum s(a);
    const double fh = sigma_root(s, k);
    const Mat f = c.f.at(i);
    const Mat gmat = f / (k * std::pow(fh, k - 1));
    const double fn = f.norm();
    const Vec x = g.node(i);
    const double f_model = spec.f->value(x, u[i], c.aug.grad.at(i));

    double lhs = 0.0, lhs_model = 0.0, h_term = 0.0, scale = fn * hess_v.at(i).norm();
    for (const Increment& inc : c.inc) {
      const std::size_t ip = neighbour(g, i, inc, 1), im = neighbour(g, i, inc, -1);
      const Mat ap = c.aug.a.at(ip), am = c.aug.a.at(im);
      const double fp = sigma_root(Spectrum(ap), k), fm = sigma_root(Spectrum(am), k);
      lhs += k * std::pow(fh, k - 1) * (fp - 2.0 * fh + fm) / (inc.h * inc.h);
      h_term += frobenius(f, second_difference(c.aug.h, i, inc));
      scale += fn * (ap.norm() + 2.0 * a.norm() + am.norm() + c.aug.h.at(ip).norm() + 2.0 * c.aug.h.at(i).norm() +
                     c.aug.h.at(im).norm()) /
               (inc.h * inc.h);

      const double mp = spec.f->value(g.node(ip), u[ip], c.aug.grad.at(ip));
      const double mm = spec.f->value(g.node(im), u[im], c.aug.grad.at(im));
      lhs_model += k * std::pow(f_model, k - 1) * (mp - 2.0 * f_model + mm) / (inc.h * inc.h);

      for (const auto& [an, fnb] : {std::pair{ap, fp}, std::pair{am, fm}}) {
        const double d_lhs = fnb - fh;
        const double d_rhs = frobenius(gmat, an - a);
        const double t_tol = 1e-12 * (gmat.norm() * (an.norm() + a.norm()) + fnb + fh);
        tangent_worst = std::max(tangent_worst, d_lhs - d_rhs);
        if (d_lhs > d_rhs + t_tol) tangent_holds = false;
      }
    }
    const double rhs = frobenius(f, hess_v.at(i)) - h_term;
    const double tol = 1e-10 * scale;
    if (lhs > rhs + tol) holds = false;
    worst = std::max(worst, (lhs - rhs) / std::max(tol, 1e-300));
    min_margin = std::min(min_margin, rhs - lhs);
    max_lhs = std::max(max_lhs, lhs);
    max_rhs = std::max(max_rhs, rhs);
    max_gap = std::max(max_gap, lhs - rhs);
    model_worst = std::max(model_worst, lhs_model - rhs);
  }
  (void)n;

  const double total = static_cast<double>(evaluated + excluded);
  const double excluded_fraction = total > 0.0 ? excluded / total : 1.0;
  const double h = c.inc.front().h;
  rep.levels.push_back({h, max_lhs, max_rhs, std::max(max_gap, 0.0)});
  rep.pass = evaluated > 0 && holds && tangent_holds && excluded_fraction <= kExcludedFractionLimit;
  rep.details["evaluated_nodes"] = evaluated;
  rep.details["excluded_nodes"] = excluded;
  rep.details["excluded_fraction"] = excluded_fraction;
  rep.details["min_margin"] = min_margin;
  rep.details["worst_gap_over_tolerance"] = worst;
  rep.details["tangent_bound_holds"] = tangent_holds;
  rep.details["tangent_worst_gap"] = tangent_worst;
  // Report-only: the same inequality with the model right-hand side f(x, u, grad u) in place of
  // sigma_k^{1/k}(A_H); the gap is stencil truncation, measured in units of the grid step squared.
  const double hg = max_spacing(g);
  rep.details["model_f_worst_gap"] = model_worst;
  rep.details["model_f_stencil_constant"] = std::max(model_worst, 0.0) / (hg * hg);
  rep.details["config"] = config_json(cfg, h);
  return rep;
}

CheckReport i1_pointwise_bound(const ScalarField& u, const ProblemSpec& spec, const EstimateConfig& cfg) {
  const EstimateContext c = estimate_context(u, spec, cfg);
  const Grid& g = u.grid();
  const int k = spec.k;
  const double q = cfg.q;
  ScalarField w = ScalarField::zeros(g);
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = c.vt[i] > 0.0 ? std::pow(c.vt[i], q / 2.0) : 0.0;
  const VectorField grad_w = gradient(w);

  CheckReport rep;
  rep.name = "i1_pointwise_bound";
  rep.reference = "(v~+)^{q-2} F^{ij} grad_i v~ grad_j v~ >= (4 f^k / q^2) |grad (v~+)^{q/2}|^2 / tr A_H";

  std::size_t evaluated = 0, skipped = 0, excluded = 0;
  double min_rel = std::numeric_limits<double>::infinity();
  double min_rel_stencil = std::numeric_limits<double>::infinity();
  double min_chain_gap = std::numeric_limits<double>::infinity();
  double lhs_max = 0.0, rhs_max = 0.0;
  bool holds = true;
  for (std::size_t i : c.inner.nodes()) {
    if (!c.cone_ok[i]) {
      ++excluded;
      continue;
    }
    if (!(c.vt[i] > 0.0)) {
      ++skipped;
      continue;
    }
    ++evaluated;
    const Mat a = c.aug.a.at(i);
    const Spectrum s(a);
    const double sk = s.sigma(k);
    const double tr = a.trace();
    const Mat f = c.f.at(i);
    const Vec gv = c.grad_vt.at(i);
    const double wgt = std::pow(c.vt[i], q - 2.0);
    const double lhs = wgt * gv.dot(f * gv);
    // (4/q^2) |grad (v~)^{q/2}|^2 = (v~)^{q-2} |grad v~|^2 by the chain rule.
    const double rhs = sk * wgt * gv.squaredNorm() / tr;
    const double rhs_stencil = 4.0 * sk / (q * q) * grad_w.at(i).squaredNorm() / tr;
    const double scale = wgt * f.norm() * gv.squaredNorm();
    const double tol = 1e-10 * scale;
    if (lhs < rhs - tol) holds = false;
    if (scale > 0.0) {
      min_rel = std::min(min_rel, (lhs - rhs) / scale);
      min_rel_stencil = std::min(min_rel_stencil, (lhs - rhs_stencil) / scale);
    }
    min_chain_gap = std::min(min_chain_gap, quotient_chain_gap(k, SymMat::from_upper(a)));
    lhs_max = std::max(lhs_max, lhs);
    rhs_max = std::max(rhs_max, rhs);
  }
  const double total = static_cast<double>(evaluated + skipped + excluded);
  const double excluded_fraction = total > 0.0 ? excluded / total : 1.0;
  rep.levels.push_back({c.inc.front().h, lhs_max, rhs_max, std::max(0.0, -min_rel)});
  rep.pass = holds && excluded_fraction <= kExcludedFractionLimit;
  rep.details["evaluated_nodes"] = evaluated;
  rep.details["nonpositive_nodes"] = skipped;
  rep.details["excluded_nodes"] = excluded;
  rep.details["excluded_fraction"] = excluded_fraction;
  rep.details["min_relative_margin"] = evaluated ? min_rel : 0.0;
  rep.details["min_relative_margin_stencil_power"] = evaluated ? min_rel_stencil : 0.0;
  rep.details["min_quotient_chain_gap"] = evaluated ? min_chain_gap : 0.0;
  rep.details["config"] = config_json(cfg, c.inc.front().h);
  return rep;
}

CheckReport bochner_identity_check(const ScalarField& u, const ScalarModel& h1, const Increment& inc) {
  const Grid& g = u.grid();
  const int n = g.dim();
  if (h1.dim() != n) throw DimensionError("H1 dimension does not match the grid");
  (void)Increment::make(g, inc.axis, inc.h);
  const double h = std::abs(inc.h);
  const Region region = Region::interior(g, 2.0 * h);
  if (region.nodes().empty()) throw DimensionError("no nodes at distance >= 2|h| from the boundary");

  const VectorField grad = gradient(u);
  ScalarField phi = ScalarField::zeros(g);
  const Vec zero = Vec::Zero(n);
  for (std::size_t i = 0; i < g.size(); ++i) phi[i] = h1.value(g.node(i), u[i], zero);
  const std::ptrdiff_t st = inc.steps * g.stride(inc.axis);
  const double hh = inc.h;

  auto energy = [&](std::size_t i) { return phi[i] * grad.at(i).squaredNorm(); };
  // psi(y) = grad u(y) . grad u(y - h) * backward quotient of H1[u] at y.
  auto psi = [&](std::size_t i) {
    return grad.at(i).dot(grad.at(i - st)) * (phi[i] - phi[i - st]) / hh;
  };

  CheckReport rep;
  rep.name = "bochner_identity_check";
  rep.reference =
      "Delta_ll^h (H1[u] |grad u|^2) = 2 H1 grad u . grad Delta_ll^h u + H1(x-h) |grad D_l^{-h} u|^2 "
      "+ H1(x+h) |grad D_l^h u|^2 + D_l^{-h} grad u . grad u D_l^{-h} H1 + D_l^h grad u . grad u D_l^h H1 "
      "+ D_l^h (grad u . grad u(x-h) D_l^{-h} H1)";

  double residual = 0.0, scale = 0.0, lhs_max = 0.0, rhs_max = 0.0;
  for (std::size_t i : region.nodes()) {
    const std::size_t ip = i + st, im = i - st;
    const Vec g0 = grad.at(i), gp = grad.at(ip), gm = grad.at(im);
    const double lhs = (energy(ip) - 2.0 * energy(i) + energy(im)) / (hh * hh);
    const Vec dp = (gp - g0) / hh;
    const Vec dm = (g0 - gm) / hh;
    const double t1 = 2.0 * phi[i] * g0.dot((gp - 2.0 * g0 + gm) / (hh * hh));
    const double t2 = phi[im] * dm.squaredNorm();
    const double t3 = phi[ip] * dp.squaredNorm();
    const double t4 = dm.dot(g0) * (phi[i] - phi[im]) / hh;
    const double t5 = dp.dot(g0) * (phi[ip] - phi[i]) / hh;
    const double t6 = (psi(ip) - psi(i)) / hh;
    const double rhs = t1 + t2 + t3 + t4 + t5 + t6;
    residual = std::max(residual, std::abs(lhs - rhs));
    const double local = (std::abs(energy(ip)) + 2.0 * std::abs(energy(i)) + std::abs(energy(im))) / (hh * hh) +
                         std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4) + std::abs(t5) +
                         (std::abs(psi(ip)) + std::abs(psi(i))) / h;
    scale = std::max(scale, local);
    lhs_max = std::max(lhs_max, std::abs(lhs));
    rhs_max = std::max(rhs_max, std::abs(rhs));
  }
  rep.levels.push_back({h, lhs_max, rhs_max, residual});
  rep.pass = residual <= 1e-11 * std::max(scale, 1e-300) || residual == 0.0;
  rep.details["scale"] = scale;
  rep.details["relative_residual"] = scale > 0.0 ? residual / scale : 0.0;
  rep.details["axis"] = inc.axis;
  return rep;
}

CheckReport cancellation_identity_checks(const ScalarField& u, const ProblemSpec& spec) {
  spec.validate();
  const AugmentedField aug = augment(u, spec);
  const Grid& g = u.grid();
  const int n = spec.n;
  const int k = spec.k;

  CheckReport rep;
  rep.name = "cancellation_identity_checks";
  rep.reference =
      "F^{ia} (A_H)_{ia} = k sigma_k(A_H), and (T_{k-2}(A_H) A_H)_{ia} = -F_{ia} + tr(F) delta_{ia} / (n-k+1)";

  std::size_t evaluated = 0, excluded = 0;
  double euler = 0.0, complement = 0.0, model_gap = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Mat a = aug.a.at(i);
    const Spectrum s(a);
    if (!s.in_gamma(k)) {
      ++excluded;
      continue;
    }
    ++evaluated;
    const Mat f = s.newton_tensor(k - 1);
    const Mat t = s.newton_tensor(k - 2);
    const double e_scale = k * s.sigma_abs(k);
    euler = std::max(euler, std::abs(frobenius(f, a) - k * s.sigma(k)) / std::max(e_scale, 1e-300));
    const Mat r = t * a + f - f.trace() / (n - k + 1) * Mat::Identity(n, n);
    const double c_scale = f.norm() + t.norm() * a.norm();
    complement = std::max(complement, r.cwiseAbs().maxCoeff() / std::max(c_scale, 1e-300));
    const double fm = spec.f->value(g.node(i), u[i], aug.grad.at(i));
    model_gap = std::max(model_gap, std::abs(std::pow(std::max(fm, 0.0), k) - s.sigma(k)));
  }
  const double worst = std::max(euler, complement);
  rep.levels.push_back({0.0, euler, complement, worst});
  rep.pass = evaluated > 0 && worst <= 1e-10;
  rep.details["euler_relative_residual"] = euler;
  rep.details["complement_relative_residual"] = complement;
  rep.details["evaluated_nodes"] = evaluated;
  rep.details["excluded_nodes"] = excluded;
  // Report-only: |f^k - sigma_k(A_H)| with the model f, the equation residual in the identity's units.
  rep.details["model_equation_gap"] = model_gap;
  return rep;
}

CheckReport estimate_probe_I123(const ScalarField& u, const ProblemSpec& spec, const EstimateConfig& cfg) {
  const EstimateContext c = estimate_context(u, spec, cfg);
  const Grid& g = u.grid();
  const int k = spec.k;
  const double q = cfg.q;
  if (!(q > 1.0)) throw ThresholdError("the I1/I2/I3 probe needs q > 1");
  const VectorField v = v_field(c.aug, spec);
  const ScheduleCase which = schedule_case_for(spec, c.aug);

  const Region shell = Region::ball(g, cfg.center, cfg.R + 2.0 * cfg.rho);
  const Region outer = Region::ball(g, cfg.center, cfg.R + 3.0 * cfg.rho);

  CompensatedSum i1, i2, i3;
  std::size_t excluded = 0;
  for (std::size_t i : shell.nodes()) {
    if (!c.cone_ok[i]) {
      ++excluded;
      continue;
    }
    const double eta = cutoff((g.node(i) - cfg.center).norm(), cfg.R, cfg.rho);
    if (eta == 0.0) continue;
    const double w = shell.weight(i) * eta;
    const Vec gv = c.grad_vt.at(i);
    const Mat f = c.f.at(i);
    i1.add(w * (q - 1.0) * i1_weight(c.vt[i], q, cfg.delta) * gv.dot(f * gv));
    const double p = i23_weight(c.vt[i], q, cfg.delta);
    if (p == 0.0) continue;
    i2.add(w * p * v.at(i).dot(gv));
    double h_term = 0.0;
    for (const Increment& inc : c.inc) h_term += frobenius(f, second_difference(c.aug.h, i, inc));
    i3.add(w * p * h_term);
  }

  auto ledger = [&](double s) {
    ScalarField vp = ScalarField::zeros(g), lp = ScalarField::zeros(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      vp[i] = std::max(c.vt[i], 0.0);
      lp[i] = c.lap[i] + c.c1;
    }
    return integrate_power(vp, s, shell) + integrate_power(lp, s, outer);
  };
  const double s = reverse_holder_exponent(which, k, q);
  const double j_case = ledger(s);
  const double j_k1 = ledger(q + k - 1.0);
  const double j_k = ledger(q + k);

  const double I1 = i1.value(), I2 = i2.value(), I3 = i3.value();
  const double implied = std::max(0.0, -(I2 + I3)) * cfg.rho / j_case;
  const double total = static_cast<double>(shell.nodes().size());

  CheckReport rep;
  rep.name = "estimate_probe_I123";
  rep.kind = "probe";
  rep.reference =
      "I1 = (q-1) int eta (v~+)^{q-2} F grad v~ . grad v~, I2 = int eta (v~+)^{q-1} div F . grad v~, "
      "I3 = sum_l int eta (v~+)^{q-1} F : Delta_ll^h H; I2 + I3 >= -C rho^{-1} J";
  rep.levels.push_back({c.inc.front().h, I1, I2 + I3, j_case});
  rep.implied_constant = implied;
  const double i1_scale = std::abs(I1) + 1e-300;
  rep.pass = I1 >= -1e-12 * i1_scale && excluded <= kExcludedFractionLimit * total;
  rep.details["I1"] = I1;
  rep.details["I2"] = I2;
  rep.details["I3"] = I3;
  rep.details["J_case"] = j_case;
  rep.details["J_exponent"] = s;
  rep.details["J_q_plus_k_minus_1"] = j_k1;
  rep.details["J_q_plus_k"] = j_k;
  rep.details["C1"] = c.c1;
  rep.details["schedule_case"] = to_string(which);
  rep.details["excluded_nodes"] = excluded;
  rep.details["implied_constant_history"] = std::vector<double>{implied};
  // Report-only sign record of the cancellation structure.
  rep.details["i1_positive"] = I1 > 0.0;
  rep.details["i2_plus_i3_sign"] = (I2 + I3 > 0.0) - (I2 + I3 < 0.0);
  const CutoffBounds cb = cutoff_bounds(cfg.R, cfg.rho);
  rep.details["cutoff_gradient_constant"] = cb.gradient;
  rep.details["cutoff_hessian_constant"] = cb.hessian;
  rep.details["config"] = config_json(cfg, c.inc.front().h);
  return rep;
}

QThreshold reverse_holder_threshold(ScheduleCase c, int k, int n) {
  const ScheduleConstants sc = schedule_constants(c, k, n);
  const double t = to_double(sc.q_threshold);
  return {std::max(t, 1.0), t <= 1.0};
}

double reverse_holder_exponent(ScheduleCase c, int k, double q) {
  switch (c) {
    case ScheduleCase::kCase1: return q + k - 1.0;
    case ScheduleCase::kCase2:
    case ScheduleCase::kK2General: return q + k;
    case ScheduleCase::kK3General: return q + 2.0 * k - 1.0;
  }
  return q + k;
}

double log_integral_power(const ScalarField& w, double s, const Region& region) {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i : region.nodes()) {
    if (!(w[i] > 0.0)) throw DomainError("log-space integral needs a positive integrand");
    peak = std::max(peak, std::log(region.weight(i)) + s * std::log(w[i]));
  }
  if (region.nodes().empty()) throw DomainError("empty region");
  CompensatedSum acc;
  for (std::size_t i : region.nodes()) acc.add(std::exp(std::log(region.weight(i)) + s * std::log(w[i]) - peak));
  return peak + std::log(acc.value());
}

CheckReport reverse_holder_probe(const ScalarField& u, const ProblemSpec& spec, const EstimateConfig& cfg,
                                 ScheduleCase which) {
  const int n = spec.n;
  const int k = spec.k;
  const ScheduleConstants sc = schedule_constants(which, k, n);
  const QThreshold th = reverse_holder_threshold(which, k, n);
  if (!(cfg.q > th.value)) {
    throw ThresholdError(to_string(which) + " reverse-Hoelder step needs q > " + std::to_string(th.value) +
                         (th.q_gt_one_binding ? " (q > 1 is binding)" : "") + ", got q = " + std::to_string(cfg.q));
  }
  const EstimateContext c = estimate_context(u, spec, cfg);
  const Grid& g = u.grid();
  ScalarField w = ScalarField::zeros(g);
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = c.lap[i] + c.c1;

  const double beta = to_double(sc.beta);
  const double q = cfg.q;
  const double s = q + sc.decrement;
  const Region inner_ball = Region::ball(g, cfg.center, cfg.R + cfg.rho);
  const Region outer_ball = Region::ball(g, cfg.center, cfg.R + 3.0 * cfg.rho);
  const double log_lhs = log_integral_power(w, beta * q, inner_ball) / beta;
  const double log_rhs = std::log(q / (cfg.rho * cfg.rho)) + log_integral_power(w, s, outer_ball);
  const double implied = std::exp(log_lhs - log_rhs);

  CheckReport rep;
  rep.name = "reverse_holder_probe";
  rep.kind = "probe";
  rep.reference = "(int_{B_{R+rho}} (Lap u + C1)^{beta q})^{1/beta} <= C (q/rho^2) int_{B_{R+3rho}} (Lap u + C1)^{q+d}";
  rep.levels.push_back({c.inc.front().h, std::exp(log_lhs), std::exp(log_rhs), implied});
  rep.implied_constant = implied;
  const bool gate = beta * q > s;
  rep.pass = gate && std::isfinite(implied) && implied > 0.0;
  rep.details["schedule_case"] = to_string(which);
  rep.details["beta"] = to_string(sc.beta);
  rep.details["rhs_exponent"] = s;
  rep.details["q_threshold"] = th.value;
  rep.details["binding_bound"] = th.q_gt_one_binding ? "q > 1" : "case threshold";
  rep.details["exponent_gate"] = {{"beta_q", beta * q}, {"q_plus_d", s}, {"holds", gate}};
  rep.details["log_lhs"] = log_lhs;
  rep.details["log_rhs_core"] = log_rhs;
  rep.details["C1"] = c.c1;
  rep.details["implied_constant_history"] = std::vector<double>{implied};
  rep.details["config"] = config_json(cfg, c.inc.front().h);
  return rep;
}

CheckReport sup_norm_chain(const ScalarField& u, const ProblemSpec& spec, const MoserSchedule& schedule,
                           const EstimateConfig& cfg) {
  if (schedule.k != spec.k || schedule.n != spec.n) throw ConfigError("schedule does not match the problem");
  const EstimateContext c = estimate_context(u, spec, cfg);
  const Grid& g = u.grid();
  ScalarField w = ScalarField::zeros(g);
  for (std::size_t i = 0; i < g.size(); ++i) w[i] = c.lap[i] + c.c1;

  const double beta = to_double(schedule.constants.beta);
  const int last = std::min<int>(8, static_cast<int>(schedule.q.size()) - 1);
  const Region base = Region::ball(g, cfg.center, cfg.R);
  double node_max = 0.0;
  for (std::size_t i : base.nodes()) node_max = std::max(node_max, w[i]);
  const double log_measure = std::log(base.measure());

  std::vector<double> nested_log, normalized, exponents;
  double dual_gap = 0.0;
  bool monotone = true;
  for (int j = 0; j <= last; ++j) {
    const double e = beta * schedule.q[j];
    if (!(e > 0.0)) throw DomainError("sup-norm chain needs positive exponents");
    exponents.push_back(e);
    const Region ball = Region::ball(g, cfg.center, (1.0 + std::pow(3.0, -j - 1)) * cfg.R);
    nested_log.push_back(std::pow(beta, -j - 1) * log_integral_power(w, e, ball));
    const double log_base = log_integral_power(w, e, base);
    normalized.push_back(std::exp((log_base - log_measure) / e));
    if (e <= 50.0) {
      const double direct = integrate_power(w, e, base);
      dual_gap = std::max(dual_gap, std::abs(std::exp(log_base) - direct) / direct);
    }
    if (j > 0 && normalized[j] < normalized[j - 1] * (1.0 - 1e-12)) monotone = false;
  }
  const double final_ratio = normalized.back() / node_max;
  const bool reached = last >= 8;
  const bool converged = !reached || std::abs(final_ratio - 1.0) <= 0.05;

  CheckReport rep;
  rep.name = "sup_norm_chain";
  rep.kind = "probe";
  rep.reference =
      "(int_{B_{(1+3^{-j-1})R}} (Lap u + C1)^{beta q_j})^{beta^{-j-1}} and the normalized L^{beta q_j} norms on B_R";
  for (int j = 0; j <= last; ++j) {
    rep.levels.push_back({exponents[j], std::exp(nested_log[j]), normalized[j], std::abs(normalized[j] / node_max - 1.0)});
  }
  rep.pass = monotone && converged && dual_gap <= 1e-10;
  rep.details["node_max"] = node_max;
  rep.details["normalized_norms"] = normalized;
  rep.details["nested_log_values"] = nested_log;
  rep.details["exponents"] = exponents;
  rep.details["monotone"] = monotone;
  rep.details["final_ratio_to_max"] = final_ratio;
  rep.details["reached_j8"] = reached;
  rep.details["log_direct_max_relative_gap"] = dual_gap;
  rep.details["schedule"] = to_json(schedule);
  rep.details["C1"] = c.c1;
  rep.details["config"] = config_json(cfg, c.inc.front().h);
  return rep;
}

CheckReport f_xi_extension_check(const ScalarField& u, const ProblemSpec& spec, const EstimateConfig& cfg) {
  const EstimateContext c = estimate_context(u, spec, cfg);
  const Grid& g = u.grid();
  const ScalarModel& f = *spec.f;
  const EvalBox box = eval_box_for(c.aug, Region::interior(g, max_spacing(g)));
  const CSigma cs = compute_c_sigma(f, box);
  const double c_sigma = cs.with_safety;

  std::size_t evaluated = 0, unabsorbed = 0;
  double slack = 0.0, min_margin = std::numeric_limits<double>::infinity();
  double lhs_max = -std::numeric_limits<double>::infinity(), rhs_max = lhs_max;
  for (std::size_t i : c.inner.nodes()) {
    const Vec x = g.node(i);
    const Vec g0 = c.aug.grad.at(i);
    const ScalarJet jet = f.jet(x, u[i], g0);
    for (const Increment& inc : c.inc) {
      ++evaluated;
      const std::size_t ip = neighbour(g, i, inc, 1), im = neighbour(g, i, inc, -1);
      const Vec xp = g.node(ip), xm = g.node(im);
      const Vec gp = c.aug.grad.at(ip), gm = c.aug.grad.at(im);
      const double h2 = inc.h * inc.h;
      const double fp = f.value(xp, u[ip], gp), fm = f.value(xm, u[im], gm);
      const double lhs = (fp - 2.0 * jet.value + fm) / h2;
      const double t1 = jet.dxi.dot(gp - 2.0 * g0 + gm) / h2;
      const double dp = (gp - g0).norm() / std::abs(inc.h), dm = (g0 - gm).norm() / std::abs(inc.h);
      const double quad = dp * dp + dm * dm;
      const double xz = (f.value(xp, u[ip], g0) - 2.0 * jet.value + f.value(xm, u[im], g0)) / h2;
      const double rhs = t1 - c_sigma * quad + xz;
      const double scale = (std::abs(fp) + 2.0 * std::abs(jet.value) + std::abs(fm)) / h2 +
                           jet.dxi.norm() * (gp - 2.0 * g0 + gm).norm() / h2 + c_sigma * quad;
      const double deficit = rhs - lhs;
      const double tol = 1e-10 * scale;
      min_margin = std::min(min_margin, lhs - rhs);
      lhs_max = std::max(lhs_max, lhs);
      rhs_max = std::max(rhs_max, rhs);
      if (deficit > tol) {
        const double lin = dp + dm;
        if (lin > 0.0) {
          slack = std::max(slack, (deficit - tol) / lin);
        } else {
          ++unabsorbed;
        }
      }
    }
  }

  CheckReport rep;
  rep.name = "f_xi_extension_check";
  rep.reference =
      "Delta_ll^h f[u] >= f_xi[u] . grad Delta_ll^h u - C_Sigma |D_l^{+-h} grad u|^2 - C |D_l^{+-h} grad u| "
      "+ second difference of f in (x, z) at fixed xi";
  rep.levels.push_back({c.inc.front().h, lhs_max, rhs_max, slack});
  rep.implied_constant = slack;
  rep.pass = evaluated > 0 && unabsorbed == 0 && std::isfinite(slack);
  rep.details["c_sigma_sampled"] = cs.sampled;
  rep.details["c_sigma_used"] = c_sigma;
  rep.details["c_sigma_samples"] = cs.samples;
  rep.details["linear_slack_constant"] = slack;
  rep.details["unabsorbed_nodes"] = unabsorbed;
  rep.details["evaluated_pairs"] = evaluated;
  rep.details["min_margin"] = min_margin;
  rep.details["config"] = config_json(cfg, c.inc.front().h);
  return rep;
}

}  // namespace sigk
