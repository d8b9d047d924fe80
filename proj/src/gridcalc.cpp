#include "sigk/gridcalc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "sigk/errors.hpp"

namespace sigk {

namespace {

void require_same_grid(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw DimensionError("fields live on different grids");
}

std::vector<double> zeros(const Grid& g) { return std::vector<double>(g.size(), 0.0); }

// 8-point Gauss-Legendre rule on [0, 1].
constexpr std::array<double, 8> kGlNodes = {0.019855071751231856, 0.10166676129318664,
                                            0.2372337950418355,   0.4082826787521751,
                                            0.5917173212478249,   0.7627662049581645,
                                            0.8983332387068134,   0.9801449282487681};
constexpr std::array<double, 8> kGlWeights = {0.05061426814518813, 0.11119051722668724,
                                              0.15685332293894363, 0.18134189168918100,
                                              0.18134189168918100, 0.15685332293894363,
                                              0.11119051722668724, 0.05061426814518813};

}  // namespace

Region omega_h(const Grid& grid, double h) { return Region::interior(grid, std::abs(h)); }

ScalarField shift(const ScalarField& u, int axis, int steps) {
  const Grid& g = u.grid();
  auto out = zeros(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.fits(i, axis, steps)) out[i] = u.shifted(i, axis, steps);
  }
  return ScalarField(g, std::move(out));
}

ScalarField fdq(const ScalarField& u, const Increment& inc) {
  const Grid& g = u.grid();
  if (std::abs(inc.steps) * g.spacing(inc.axis) > 0.5 * (g.box().hi[inc.axis] - g.box().lo[inc.axis])) {
    throw DomainError("increment too long for the grid: Omega_h is empty");
  }
  auto out = zeros(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.fits(i, inc.axis, inc.steps)) out[i] = (u.shifted(i, inc.axis, inc.steps) - u[i]) / inc.h;
  }
  return ScalarField(g, std::move(out));
}

ScalarField sdq(const ScalarField& u, const Increment& inc) {
  const Grid& g = u.grid();
  if (std::abs(inc.steps) * g.spacing(inc.axis) > 0.5 * (g.box().hi[inc.axis] - g.box().lo[inc.axis])) {
    throw DomainError("increment too long for the grid: Omega_h is empty");
  }
  auto out = zeros(g);
  const double h2 = inc.h * inc.h;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.fits(i, inc.axis, inc.steps) && g.fits(i, inc.axis, -inc.steps)) {
      out[i] = (u.shifted(i, inc.axis, inc.steps) - 2.0 * u[i] + u.shifted(i, inc.axis, -inc.steps)) / h2;
    }
  }
  return ScalarField(g, std::move(out));
}

ScalarField v_h(const ScalarField& u, double h) {
  const Grid& g = u.grid();
  auto out = zeros(g);
  for (int l = 0; l < g.dim(); ++l) {
    const ScalarField d = sdq(u, Increment::make(g, l, h));
    for (std::size_t i = 0; i < g.size(); ++i) out[i] += d[i];
  }
  return ScalarField(g, std::move(out));
}

double dq_product_rule_check(const ScalarField& u, const ScalarField& w, const Increment& inc) {
  require_same_grid(u, w);
  const Grid& g = u.grid();
  std::vector<double> uw(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) uw[i] = u[i] * w[i];
  const ScalarField d_uw = fdq(ScalarField(g, std::move(uw)), inc);
  const ScalarField d_u = fdq(u, inc);
  const ScalarField d_w = fdq(w, inc);
  const Region omega = omega_h(g, inc.h);
  double r = 0.0;
  for (std::size_t i : omega.nodes()) {
    const double u_shift = u.shifted(i, inc.axis, inc.steps);
    r = std::max(r, std::abs(d_uw[i] - u_shift * d_w[i] - w[i] * d_u[i]));
  }
  return r;
}

double lp_norm(const ScalarField& u, double s, const Region& region) {
  if (!(region.grid() == u.grid())) throw DimensionError("region and field grids differ");
  if (std::isinf(s) && s > 0) {
    double m = 0.0;
    for (std::size_t i : region.nodes()) m = std::max(m, std::abs(u[i]));
    return m;
  }
  if (!(s >= 1.0)) throw DomainError("L^s norm needs s >= 1");
  CompensatedSum acc;
  for (std::size_t i : region.nodes()) acc.add(region.weight(i) * std::pow(std::abs(u[i]), s));
  return std::pow(acc.value(), 1.0 / s);
}

double integrate(const ScalarField& u, const Region& region) {
  if (!(region.grid() == u.grid())) throw DimensionError("region and field grids differ");
  CompensatedSum acc;
  for (std::size_t i : region.nodes()) acc.add(region.weight(i) * u[i]);
  return acc.value();
}

namespace {

// Tensor trapezoid error bound sum_a h_a^2/12 |region| max|d_aa g| for the integrand g,
// with d_aa g from grid second differences, pushed through t -> t^{1/s}.
double norm_quadrature_error(const ScalarField& g_abs_pow, double s, const Region& region) {
  const Grid& grid = g_abs_pow.grid();
  double bound = 0.0;
  for (int a = 0; a < grid.dim(); ++a) {
    const ScalarField d2 = second_derivative(g_abs_pow, a);
    double m = 0.0;
    for (std::size_t i : region.nodes()) m = std::max(m, std::abs(d2[i]));
    bound += grid.spacing(a) * grid.spacing(a) / 12.0 * region.measure() * m;
  }
  const double integral = integrate(g_abs_pow, region);
  if (!(integral > 0.0)) return std::pow(bound, 1.0 / s);
  return std::pow(integral, 1.0 / s - 1.0) / s * bound;
}

ScalarField abs_pow(const ScalarField& u, double s) {
  std::vector<double> v(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = std::pow(std::abs(u[i]), s);
  return ScalarField(u.grid(), std::move(v));
}

}  // namespace

NormBound dq_norm_bound_check(const ScalarField& u, const Increment& inc, double s) {
  const Grid& g = u.grid();
  const Region inner = omega_h(g, inc.h);
  const Region all = Region::whole(g);
  const ScalarField dq = fdq(u, inc);
  const ScalarField du = derivative(u, inc.axis);
  NormBound r;
  r.lhs = lp_norm(dq, s, inner);
  r.rhs = lp_norm(du, s, all);
  r.rhs_same_region = lp_norm(du, s, inner);
  if (std::isinf(s)) {
    r.tol = 0.0;
  } else {
    r.tol = 5.0 * (norm_quadrature_error(abs_pow(dq, s), s, inner) +
                   norm_quadrature_error(abs_pow(du, s), s, all));
  }
  r.holds = r.lhs <= r.rhs + r.tol;
  return r;
}

CheckReport vh_convergence(const AnalyticField& u, const Grid& grid, const std::vector<double>& hs,
                           double s) {
  if (hs.empty()) throw DomainError("empty h sequence");
  for (std::size_t i = 1; i < hs.size(); ++i) {
    if (!(std::abs(hs[i]) < std::abs(hs[i - 1]))) throw DomainError("h sequence must decrease");
  }
  double hmax = 0.0;
  for (double h : hs) hmax = std::max(hmax, std::abs(h));
  const Region inner = Region::interior(grid, hmax);
  const ScalarField uf = ScalarField::sample(grid, u.value);
  const ScalarField lap = ScalarField::sample(grid, [&](const Vec& x) { return u.hessian(x).trace(); });

  CheckReport rep;
  rep.name = "vh_convergence";
  rep.reference = "v_h = sum_l Delta_ll^h u converges to the Laplacian in L^s_loc";
  double scale = 0.0;
  bool bounded = true;
  for (double h : hs) {
    const ScalarField v = v_h(uf, h);
    std::vector<double> err(grid.size(), 0.0);
    for (std::size_t i : inner.nodes()) err[i] = v[i] - lap[i];
    const double e = lp_norm(ScalarField(grid, std::move(err)), s, inner);

    // Taylor modulus bound.
    double bound = 0.0;
    for (int l = 0; l < grid.dim(); ++l) {
      for (int sign : {1, -1}) {
        for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
          const double t = kGlNodes[q];
          std::vector<double> d(grid.size(), 0.0);
          for (std::size_t i : inner.nodes()) {
            Vec x = grid.node(i);
            const double base = u.hessian(x)(l, l);
            x(l) += sign * t * h;
            d[i] = u.hessian(x)(l, l) - base;
          }
          bound += kGlWeights[q] * lp_norm(ScalarField(grid, std::move(d)), s, inner);
        }
      }
    }
    scale = std::max(scale, lp_norm(lap, s, inner));
    bounded = bounded && e <= bound * (1.0 + 1e-12) + 1e-14 * scale;
    rep.levels.push_back({h, e, bound, e});
  }
  rep.observed_order = min_observed_order(rep.levels, 1e-12 * std::max(scale, 1.0));
  rep.pass = bounded && (!rep.observed_order || *rep.observed_order >= 1.8);
  rep.details["s"] = std::isinf(s) ? nlohmann::json("inf") : nlohmann::json(s);
  rep.details["within_modulus_bound"] = bounded;
  return rep;
}

ScalarField derivative(const ScalarField& u, int axis) {
  const Grid& g = u.grid();
  auto out = zeros(g);
  const double h = g.spacing(axis);
  const int last = g.points()[axis] - 1;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const int k = g.index(i, axis);
    if (k == 0) {
      out[i] = (-3.0 * u[i] + 4.0 * u.shifted(i, axis, 1) - u.shifted(i, axis, 2)) / (2.0 * h);
    } else if (k == last) {
      out[i] = (3.0 * u[i] - 4.0 * u.shifted(i, axis, -1) + u.shifted(i, axis, -2)) / (2.0 * h);
    } else {
      out[i] = (u.shifted(i, axis, 1) - u.shifted(i, axis, -1)) / (2.0 * h);
    }
  }
  return ScalarField(g, std::move(out));
}

ScalarField second_derivative(const ScalarField& u, int axis) {
  const Grid& g = u.grid();
  auto out = zeros(g);
  const double h2 = g.spacing(axis) * g.spacing(axis);
  const int last = g.points()[axis] - 1;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const int k = g.index(i, axis);
    if (k == 0) {
      out[i] = (2.0 * u[i] - 5.0 * u.shifted(i, axis, 1) + 4.0 * u.shifted(i, axis, 2) -
                u.shifted(i, axis, 3)) / h2;
    } else if (k == last) {
      out[i] = (2.0 * u[i] - 5.0 * u.shifted(i, axis, -1) + 4.0 * u.shifted(i, axis, -2) -
                u.shifted(i, axis, -3)) / h2;
    } else {
      out[i] = (u.shifted(i, axis, 1) - 2.0 * u[i] + u.shifted(i, axis, -1)) / h2;
    }
  }
  return ScalarField(g, std::move(out));
}

VectorField gradient(const ScalarField& u) {
  const Grid& g = u.grid();
  VectorField out(g, g.dim());
  for (int a = 0; a < g.dim(); ++a) {
    const ScalarField d = derivative(u, a);
    for (std::size_t i = 0; i < g.size(); ++i) out(i, a) = d[i];
  }
  return out;
}

MatrixField hessian(const ScalarField& u) {
  const Grid& g = u.grid();
  const int n = g.dim();
  MatrixField out(g, n);
  std::vector<ScalarField> first;
  first.reserve(n);
  for (int a = 0; a < n; ++a) first.push_back(derivative(u, a));
  for (int a = 0; a < n; ++a) {
    const ScalarField d2 = second_derivative(u, a);
    for (std::size_t i = 0; i < g.size(); ++i) out(i, a, a) = d2[i];
    for (int b = a + 1; b < n; ++b) {
      const ScalarField m = derivative(first[b], a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        out(i, a, b) = m[i];
        out(i, b, a) = m[i];
      }
    }
  }
  return out;
}

ScalarField laplacian(const ScalarField& u) {
  const Grid& g = u.grid();
  auto out = zeros(g);
  for (int a = 0; a < g.dim(); ++a) {
    const ScalarField d2 = second_derivative(u, a);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] += d2[i];
  }
  return ScalarField(g, std::move(out));
}

VectorField divergence(const MatrixField& f) {
  const Grid& g = f.grid();
  const int n = f.dim();
  if (n != g.dim()) throw DimensionError("divergence needs an n x n field");
  VectorField out(g, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const ScalarField d = derivative(f.entry(i, j), i);
      for (std::size_t p = 0; p < g.size(); ++p) out(p, j) += d[p];
    }
  }
  return out;
}

VectorField sample_gradient(const Grid& grid, const AnalyticField& u) {
  VectorField out(grid, grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) out.set(i, u.gradient(grid.node(i)));
  return out;
}

MatrixField sample_hessian(const Grid& grid, const AnalyticField& u) {
  MatrixField out(grid, grid.dim());
  for (std::size_t i = 0; i < grid.size(); ++i) out.set(i, u.hessian(grid.node(i)));
  return out;
}

}  // namespace sigk
