#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sigk/errors.hpp"
#include "sigk/solver.hpp"
#include "sigk/symfun.hpp"

using namespace sigk;

namespace {

const Box kCube = Box::cube(3, -0.5, 0.5);

ScalarField exact_on(const ManufacturedSolution& m, const Grid& g) { return ScalarField::sample(g, m.u.value); }

double max_error(const ScalarField& a, const ScalarField& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("manufactured names and validity") {
    const auto names = manufactured_names();
    CHECK(names.size() == 4);
    CHECK_THROWS_AS((void)manufactured("nope", 3, 2, kCube), ConfigError);
    CHECK_THROWS_AS((void)manufactured("cap-negative", 3, 2, Box::cube(3, -1.0, 1.0)), DomainError);
    CHECK_THROWS_AS((void)manufactured("bubble-positive", 3, 2, Box::cube(2, -0.5, 0.5)), DimensionError);
  }

  TEST_CASE("bubble right-hand side matches sigma_k of the Schouten-type tensor") {
    oracle::Gen gen(31);
    for (int n : {3, 4}) {
      for (int k = 2; k <= n; ++k) {
        const ManufacturedSolution m = manufactured("bubble-positive", n, k, Box::cube(n, -0.5, 0.5));
        for (int t = 0; t < 20; ++t) {
          Vec x(n);
          for (int a = 0; a < n; ++a) x(a) = gen.uniform(-0.5, 0.5);
          const double u = 1.0 + x.squaredNorm();
          // hess u - |grad u|^2 / (2u) I
          const oracle::Dense a = (2.0 - 2.0 * x.squaredNorm() / u) * oracle::Dense::Identity(n, n);
          const double want = std::pow(oracle::esf_by_minors(a, k), 1.0 / k);
          CHECK(m.spec.f->value(x, u, Vec(2.0 * x)) == doctest::Approx(want).epsilon(1e-13));
        }
      }
    }
  }

  TEST_CASE("quadratic data: exact start takes one step and stays exact") {
    const ManufacturedSolution m = manufactured("quadratic-khessian", 3, 2, kCube);
    const Grid g = Grid::uniform(kCube, 9);
    const ScalarField u = exact_on(m, g);
    CHECK(discrete_residual(m.spec, u) <= 1e-12);
    const SolveResult r = newton_solve(m.spec, u, u);
    CHECK(r.converged);
    CHECK(r.iterations() == 1);
    CHECK(max_error(r.u, u) <= 1e-10);
    const nlohmann::json j = to_json(r);
    CHECK(j["iterations"] == 1);
  }

  TEST_CASE("quadratic data: perturbed start converges to the exact field") {
    for (int k : {2, 3}) {
      const ManufacturedSolution m = manufactured("quadratic-khessian", 3, k, kCube);
      const Grid g = Grid::uniform(kCube, 9);
      const ScalarField exact = exact_on(m, g);
      const SolveResult r = newton_solve(m.spec, exact, perturbed_start(m, g));
      CHECK(r.converged);
      CHECK(max_error(r.u, exact) <= 1e-10);
      for (double margin : r.margins) CHECK(margin > 0.0);
      for (std::size_t i = 1; i < r.residuals.size(); ++i) CHECK(r.residuals[i] < r.residuals[i - 1]);
    }
  }

  TEST_CASE("negative sign case is solved through the reflected problem") {
    const ManufacturedSolution m = manufactured("cap-negative", 3, 2, kCube);
    const Grid g = Grid::uniform(kCube, 9);
    const ScalarField exact = exact_on(m, g);
    const ScalarField start = perturbed_start(m, g);
    CHECK(max_error(start, exact) > 1e-3);
    const SolveResult r = newton_solve(m.spec, exact, start);
    CHECK(r.converged);
    CHECK(max_error(r.u, exact) <= 1e-10);
    CHECK(discrete_residual(m.spec, r.u) <= 1e-9);
  }

  TEST_CASE("inadmissible start and bad sign case are refused") {
    const ManufacturedSolution m = manufactured("quadratic-khessian", 3, 2, kCube);
    const Grid g = Grid::uniform(kCube, 9);
    const ScalarField exact = exact_on(m, g);
    const ScalarField bad = ScalarField::sample(g, [](const Vec& x) { return -x.squaredNorm(); });
    CHECK_THROWS_AS((void)newton_solve(m.spec, exact, bad), ConeViolation);
    CHECK_THROWS_AS((void)discrete_residual(m.spec, bad), ConeViolation);
    ProblemSpec general = m.spec;
    general.sign = SignCase::kGeneral;
    CHECK_THROWS_AS((void)newton_solve(general, exact, exact), ConfigError);
  }

  TEST_CASE("iteration budget exhaustion is a solver error") {
    const ManufacturedSolution m = manufactured("perturbed-bubble", 3, 2, kCube);
    const Grid g = Grid::uniform(kCube, 9);
    NewtonOptions o;
    o.max_iterations = 1;
    o.rel_tol = 1e-14;
    CHECK_THROWS_AS((void)newton_solve(m.spec, exact_on(m, g), perturbed_start(m, g), o), SolverError);
  }

  TEST_CASE("MMS on the perturbed bubble converges at second order") {
    const CheckReport r = mms_convergence("perturbed-bubble", 3, 2, kCube, {9, 13, 17});
    CHECK(r.pass);
    REQUIRE(r.observed_order);
    CHECK(*r.observed_order >= 1.8);
    CHECK(r.details["admissible_iterates"].get<bool>());
    for (std::size_t i = 1; i < r.levels.size(); ++i) CHECK(r.levels[i].residual < r.levels[i - 1].residual);
  }

  TEST_CASE("MMS on quadratic-profile solutions reproduces them to roundoff") {
    for (const char* name : {"bubble-positive", "cap-negative", "quadratic-khessian"}) {
      CAPTURE(name);
      MmsOptions o;
      o.estimate_checks = false;
      const CheckReport r = mms_convergence(name, 3, 2, kCube, {9, 13, 17}, o);
      CHECK(r.pass);
      CHECK(r.details["exactly_represented"].get<bool>());
      for (const auto& l : r.levels) CHECK(l.residual <= 1e-10);
    }
    CHECK_THROWS_AS((void)mms_convergence("bubble-positive", 3, 2, kCube, {9, 13}), ConfigError);
  }
}
