#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sigk/errors.hpp"
#include "sigk/gridcalc.hpp"

using namespace sigk;

namespace {

Grid unit_grid(int n, int points) { return Grid::uniform(Box::cube(n, 0.0, 1.0), points); }

AnalyticField smooth_field(int n) {
  // u = exp(x1/2) cos(x2) + sum_a x_a^3 / 3
  return {[](const Vec& x) {
            double s = 0.0;
            for (int a = 0; a < x.size(); ++a) s += x(a) * x(a) * x(a) / 3.0;
            return std::exp(0.5 * x(0)) * std::cos(x(1)) + s;
          },
          [n](const Vec& x) {
            Vec g(n);
            for (int a = 0; a < n; ++a) g(a) = x(a) * x(a);
            g(0) += 0.5 * std::exp(0.5 * x(0)) * std::cos(x(1));
            g(1) -= std::exp(0.5 * x(0)) * std::sin(x(1));
            return g;
          },
          [n](const Vec& x) {
            Mat h = Mat::Zero(n, n);
            for (int a = 0; a < n; ++a) h(a, a) = 2.0 * x(a);
            const double e = std::exp(0.5 * x(0));
            h(0, 0) += 0.25 * e * std::cos(x(1));
            h(1, 1) -= e * std::cos(x(1));
            h(0, 1) = h(1, 0) = -0.5 * e * std::sin(x(1));
            return h;
          }};
}

}  // namespace

TEST_SUITE("gridcalc") {
  TEST_CASE("grid layout is row-major with the last axis fastest") {
    const Grid g(Box::cube(2, 0.0, 1.0), {5, 7});
    CHECK(g.size() == 35);
    CHECK(g.stride(1) == 1);
    CHECK(g.stride(0) == 7);
    // node 17 = (2, 3): the center
    CHECK(g.index(17, 0) == 2);
    CHECK(g.index(17, 1) == 3);
    CHECK(g.node(17)(0) == doctest::Approx(0.5));
    CHECK(g.node(17)(1) == doctest::Approx(0.5));
    CHECK(g.depth(17) == 2);
    CHECK(g.depth(8) == 1);
    CHECK(g.depth(0) == 0);
    CHECK_THROWS((void)Grid(Box::cube(2, 0.0, 1.0), {3, 5}));
  }

  TEST_CASE("increments must be grid multiples") {
    const Grid g = unit_grid(2, 9);
    const Increment inc = Increment::make(g, 1, 0.25);
    CHECK(inc.steps == 2);
    CHECK(inc.reversed().steps == -2);
    CHECK_THROWS((void)Increment::make(g, 0, 0.2));
    CHECK_THROWS((void)Increment::make(g, 0, 0.0));
  }

  TEST_CASE("first and second difference quotients on polynomials") {
    const Grid g = unit_grid(2, 9);
    const ScalarField u = ScalarField::sample(g, [](const Vec& x) { return x(0) * x(0) + x(0) * x(0) * x(0) * x(1); });
    const Increment inc = Increment::make(g, 0, 0.25);
    const ScalarField d = fdq(u, inc);
    const ScalarField s = sdq(u, inc);
    const Region om = omega_h(g, 0.25);
    CHECK(om.nodes().size() == 5 * 5);
    for (std::size_t i : om.nodes()) {
      const Vec x = g.node(i);
      const double h = 0.25;
      // (u(x+h) - u(x))/h for x^2 + x^3 y.
      const double want = 2 * x(0) + h + x(1) * (3 * x(0) * x(0) + 3 * x(0) * h + h * h);
      CHECK(d[i] == doctest::Approx(want).epsilon(1e-12));
      CHECK(s[i] == doctest::Approx(2.0 + 6.0 * x(0) * x(1)).epsilon(1e-12));
    }
  }

  TEST_CASE("v_h equals the Laplacian exactly on cubics") {
    const Grid g = unit_grid(3, 9);
    const ScalarField u = ScalarField::sample(g, [](const Vec& x) { return x(0) * x(0) * x(1) + x(2) * x(2) * x(2); });
    const ScalarField v = v_h(u, 0.125);
    for (std::size_t i : omega_h(g, 0.125).nodes()) {
      const Vec x = g.node(i);
      CHECK(v[i] == doctest::Approx(2 * x(1) + 6 * x(2)).epsilon(1e-12));
    }
  }

  TEST_CASE("discrete product rule is exact") {
    const Grid g = unit_grid(2, 11);
    const ScalarField u = ScalarField::sample(g, [](const Vec& x) { return std::sin(3 * x(0)) + x(1); });
    const ScalarField w = ScalarField::sample(g, [](const Vec& x) { return std::exp(x(0) * x(1)); });
    CHECK(dq_product_rule_check(u, w, Increment::make(g, 0, 0.2)) <= 1e-12);
    CHECK(dq_product_rule_check(u, w, Increment::make(g, 1, -0.1)) <= 1e-12);
  }

  TEST_CASE("shift pads with zeros") {
    const Grid g = unit_grid(1, 5);
    const ScalarField u = ScalarField::sample(g, [](const Vec& x) { return 1.0 + x(0); });
    const ScalarField s = shift(u, 0, 1);
    CHECK(s[0] == doctest::Approx(1.25));
    CHECK(s[4] == 0.0);
  }

  TEST_CASE("trapezoid quadrature on [0,1]") {
    const Grid g = unit_grid(1, 5);
    const ScalarField u = ScalarField::sample(g, [](const Vec& x) { return x(0) * x(0); });
    // 1/3 + h^2/6 with h = 1/4.
    CHECK(integrate(u, Region::whole(g)) == doctest::Approx(0.34375).epsilon(1e-15));
    CHECK(Region::whole(g).measure() == doctest::Approx(1.0));
  }

  TEST_CASE("norms of a constant") {
    const Grid g = unit_grid(2, 7);
    const ScalarField c = ScalarField::sample(g, [](const Vec&) { return -2.0; });
    CHECK(lp_norm(c, 2.0, Region::whole(g)) == doctest::Approx(2.0));
    CHECK(lp_norm(c, 4.0, Region::whole(g)) == doctest::Approx(2.0));
    CHECK(lp_norm(c, INFINITY, Region::whole(g)) == doctest::Approx(2.0));
  }

  TEST_CASE("regions") {
    const Grid g = unit_grid(2, 11);
    const Region inner = Region::interior(g, 0.2);
    CHECK(inner.nodes().size() == 7 * 7);
    CHECK(inner.measure() == doctest::Approx(0.36));
    Vec c(2);
    c << 0.5, 0.5;
    const Region ball = Region::ball(g, c, 0.3);
    for (std::size_t i : ball.nodes()) CHECK((g.node(i) - c).norm() <= 0.35 + 1e-12);
    const Region both = inner.intersect(ball);
    CHECK(both.nodes().size() <= ball.nodes().size());
    const Region left = inner.filter([&](std::size_t i) { return g.node(i)(0) < 0.5; });
    CHECK(left.nodes().size() == 3 * 7);
  }

  TEST_CASE("stencil derivatives: central inside, one-sided at the ends") {
    const Grid g = unit_grid(2, 9);
    const ScalarField u = ScalarField::sample(g, [](const Vec& x) { return x(0) * x(0) * x(0) + x(0) * x(1); });
    const ScalarField d0 = derivative(u, 0);
    const ScalarField d00 = second_derivative(u, 0);
    const MatrixField h = hessian(u);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec x = g.node(i);
      CHECK(d00[i] == doctest::Approx(6 * x(0)).epsilon(1e-10));
      CHECK(h(i, 0, 1) == doctest::Approx(1.0).epsilon(1e-10));
      if (g.depth(i) >= 1) CHECK(d0[i] == doctest::Approx(3 * x(0) * x(0) + x(1) + 0.125 * 0.125).epsilon(1e-10));
    }
    // One-sided first derivatives are exact on quadratics.
    const ScalarField q = ScalarField::sample(g, [](const Vec& x) { return x(0) * x(0) - 3 * x(1) * x(1); });
    const VectorField dq = gradient(q);
    const ScalarField lq = laplacian(q);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec x = g.node(i);
      CHECK(dq(i, 0) == doctest::Approx(2 * x(0)).epsilon(1e-10));
      CHECK(dq(i, 1) == doctest::Approx(-6 * x(1)).epsilon(1e-10));
      CHECK(lq[i] == doctest::Approx(-4.0).epsilon(1e-10));
    }
  }

  TEST_CASE("divergence of a linear matrix field") {
    const Grid g = unit_grid(2, 7);
    MatrixField f(g, 2);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec x = g.node(i);
      f(i, 0, 0) = x(0);
      f(i, 1, 0) = 2 * x(1);
      f(i, 0, 1) = x(1) * x(1);
      f(i, 1, 1) = -x(1);
    }
    const VectorField d = divergence(f);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(d(i, 0) == doctest::Approx(3.0).epsilon(1e-10));  // d_0 F_00 + d_1 F_10
      CHECK(d(i, 1) == doctest::Approx(-1.0).epsilon(1e-10));
    }
  }

  TEST_CASE("difference-quotient norm bound") {
    const Grid g = unit_grid(2, 33);
    const ScalarField u = ScalarField::sample(g, [](const Vec& x) { return std::sin(4 * x(0)) * std::cos(x(1)); });
    for (double s : {2.0, 4.0}) {
      const NormBound b = dq_norm_bound_check(u, Increment::make(g, 0, 0.125), s);
      CHECK(b.holds);
    }
  }

  TEST_CASE("v_h converges at second order in L^2 and L^4 within the modulus bound") {
    const Grid g = Grid::uniform(Box::cube(3, -1.0, 1.0), 33);
    const double step = g.spacing(0);
    for (double s : {2.0, 4.0}) {
      const CheckReport r = vh_convergence(smooth_field(3), g, {4 * step, 2 * step, step}, s);
      REQUIRE(r.observed_order);
      CHECK(*r.observed_order >= 1.8);
      CHECK(r.details["within_modulus_bound"].get<bool>());
      CHECK(r.pass);
    }
  }

  TEST_CASE("vh_convergence rejects increasing h") {
    const Grid g = unit_grid(2, 9);
    CHECK_THROWS((void)vh_convergence(smooth_field(2), g, {0.125, 0.25}, 2.0));
  }
}
