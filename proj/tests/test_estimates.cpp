#include <doctest.h>

#include <cmath>

#include "sigk/errors.hpp"
#include "sigk/estimates.hpp"
#include "sigk/expr.hpp"
#include "sigk/moser.hpp"

using namespace sigk;

namespace {

ProblemSpec yamabe_spec(int n) {
  ProblemSpec s;
  s.n = n;
  s.k = 2;
  s.box = Box::cube(n, -0.5, 0.5);
  s.h = HModel::positive_yamabe(n, 0.5);
  s.f = ExprModel::constant(1.0, n);
  return s;
}

ScalarField bubble(const Grid& g) {
  return ScalarField::sample(g, [](const Vec& x) { return 1.0 + x.squaredNorm(); });
}

ScalarField perturbed(const Grid& g) {
  return ScalarField::sample(
      g, [](const Vec& x) { return 1.0 + x.squaredNorm() + 0.2 * std::sin(2.0 * x(0)) * std::cos(x(1)); });
}

EstimateConfig small_balls(int n) {
  EstimateConfig c;
  c.center = Vec::Zero(n);
  c.R = 0.15;
  c.rho = 0.05;
  c.q = 4.0;
  return c;
}

}  // namespace

TEST_SUITE("estimates") {
  TEST_CASE("cutoff profile and its derivative bounds") {
    CHECK(cutoff(0.1, 0.3, 0.1) == 1.0);
    CHECK(cutoff(0.4, 0.3, 0.1) == 1.0);
    CHECK(cutoff(0.45, 0.3, 0.1) == doctest::Approx(0.421875));  // (1 - 1/4)^3
    CHECK(cutoff(0.5, 0.3, 0.1) == 0.0);
    CHECK(cutoff(0.7, 0.3, 0.1) == 0.0);
    // max 6 s (1 - s^2)^2 at s^2 = 1/5; max |6 (1 - s^2)(1 - 5 s^2)| = 6 at s = 0.
    const CutoffBounds b = cutoff_bounds(0.3, 0.1);
    CHECK(b.gradient == doctest::Approx(6.0 / std::sqrt(5.0) * 0.64).epsilon(1e-6));
    CHECK(b.hessian == doctest::Approx(6.0).epsilon(1e-12));
  }

  TEST_CASE("estimate config validation") {
    const Grid g = Grid::uniform(Box::cube(3, -0.5, 0.5), 17);
    EstimateConfig c = small_balls(3);
    CHECK_NOTHROW(c.validate(g));
    c.rho = 0.06;
    CHECK_THROWS_AS(c.validate(g), ConfigError);
    c = small_balls(3);
    c.R = 0.23;
    c.rho = 0.05;
    CHECK_THROWS_AS(c.validate(g), DimensionError);
    c = small_balls(3);
    c.h = 0.05;
    CHECK_THROWS(c.validate(g));
    c = small_balls(2);
    CHECK_THROWS_AS(c.validate(g), DimensionError);
  }

  TEST_CASE("schedule case follows the H variant") {
    const Grid g = Grid::uniform(Box::cube(3, -0.5, 0.5), 5);
    ProblemSpec s = yamabe_spec(3);
    const AugmentedField aug = augment(bubble(g), s);
    CHECK(schedule_case_for(s, aug) == ScheduleCase::kCase1);
    s.h = HModel::scalar_general(3, ExprModel::parse("0.1*z", 3));
    CHECK(schedule_case_for(s, aug) == ScheduleCase::kCase2);
    s.h = HModel::scalar_quadratic(3, ExprModel::parse("x1", 3));
    CHECK(schedule_case_for(s, aug) == ScheduleCase::kCase2);
    s.h = HModel::scalar_quadratic(3, ExprModel::parse("0.1 + x1*x1", 3));
    CHECK(schedule_case_for(s, aug) == ScheduleCase::kCase1);
  }

  TEST_CASE("concavity inequality on the bubble and a perturbed bubble") {
    for (int n : {3, 4}) {
      const Grid g = Grid::uniform(Box::cube(n, -0.5, 0.5), n == 3 ? 33 : 17);
      for (const ScalarField& u : {bubble(g), perturbed(g)}) {
        const CheckReport r = concavity_dq_check(u, yamabe_spec(n), small_balls(n));
        CHECK(r.pass);
        CHECK(r.details["tangent_bound_holds"].get<bool>());
      }
    }
  }

  TEST_CASE("pointwise I1 bound for q in {2, 4, 8}") {
    const Grid g = Grid::uniform(Box::cube(3, -0.5, 0.5), 33);
    const ProblemSpec s = yamabe_spec(3);
    for (double q : {2.0, 4.0, 8.0}) {
      EstimateConfig c = small_balls(3);
      c.q = q;
      const CheckReport r = i1_pointwise_bound(perturbed(g), s, c);
      CHECK(r.pass);
      CHECK(r.details["nonpositive_nodes"].get<int>() == 0);
      CHECK(r.details["min_relative_margin"].get<double>() >= 0.0);
      CHECK(r.details["min_quotient_chain_gap"].get<double>() >= 0.0);
    }
  }

  TEST_CASE("Bochner expansion is exact for three H1 models") {
    const Grid g = Grid::uniform(Box::cube(3, -1.0, 1.0), 13);
    const ScalarField u = ScalarField::sample(g, [](const Vec& x) {
      return 2.0 + std::sin(1.3 * x(0) + 0.4 * x(1)) * std::cos(0.7 * x(2)) + 0.3 * x(0) * x(1) * x(2);
    });
    for (const char* h1 : {"0.5", "0.5 + 0.1*z", "1/(2*z) + sin(x1)*x2"}) {
      CAPTURE(h1);
      const ScalarModelPtr m = ExprModel::parse(h1, 3);
      for (int axis = 0; axis < 3; ++axis) {
        for (int steps : {1, -2}) {
          const Increment inc = Increment::make(g, axis, steps * g.spacing(axis));
          const CheckReport r = bochner_identity_check(u, *m, inc);
          CHECK(r.pass);
          CHECK(r.details["relative_residual"].get<double>() <= 1e-11);
        }
      }
    }
    CHECK_THROWS_AS((void)bochner_identity_check(u, *ExprModel::parse("z", 2), Increment::make(g, 0, g.spacing(0))),
                    DimensionError);
  }

  TEST_CASE("cancellation identities hold at every admissible node") {
    const Grid g = Grid::uniform(Box::cube(3, -0.5, 0.5), 17);
    for (const ScalarField& u : {bubble(g), perturbed(g)}) {
      const CheckReport r = cancellation_identity_checks(u, yamabe_spec(3));
      CHECK(r.pass);
      CHECK(r.details["euler_relative_residual"].get<double>() <= 1e-12);
      CHECK(r.details["complement_relative_residual"].get<double>() <= 1e-12);
    }
  }

  TEST_CASE("I1, I2, I3 probe records a nonnegative I1") {
    const Grid g = Grid::uniform(Box::cube(3, -0.5, 0.5), 33);
    const CheckReport r = estimate_probe_I123(perturbed(g), yamabe_spec(3), small_balls(3));
    CHECK(r.kind == "probe");
    CHECK(r.pass);
    CHECK(r.details["I1"].get<double>() > 0.0);
    CHECK(r.details["i1_positive"].get<bool>());
    CHECK(r.details["cutoff_hessian_constant"].get<double>() == doctest::Approx(6.0));
    // I1 vanishes on the bubble: v~ is constant there.
    const CheckReport b = estimate_probe_I123(bubble(g), yamabe_spec(3), small_balls(3));
    CHECK(b.details["I1"].get<double>() == 0.0);
  }

  TEST_CASE("reverse-Hoelder thresholds and exponents") {
    CHECK(reverse_holder_threshold(ScheduleCase::kCase1, 2, 3).value == doctest::Approx(2.0));
    CHECK(reverse_holder_threshold(ScheduleCase::kCase2, 2, 3).value == doctest::Approx(2.5));
    CHECK(reverse_holder_threshold(ScheduleCase::kK3General, 3, 3).value == doctest::Approx(4.0));
    CHECK_FALSE(reverse_holder_threshold(ScheduleCase::kCase1, 2, 3).q_gt_one_binding);
    CHECK(reverse_holder_exponent(ScheduleCase::kCase1, 2, 4.0) == 5.0);
    CHECK(reverse_holder_exponent(ScheduleCase::kCase2, 2, 4.0) == 6.0);
    CHECK(reverse_holder_exponent(ScheduleCase::kK3General, 3, 4.0) == 9.0);

    const Grid g = Grid::uniform(Box::cube(3, -0.5, 0.5), 17);
    EstimateConfig c = small_balls(3);
    c.q = 2.0;
    CHECK_THROWS_AS((void)reverse_holder_probe(bubble(g), yamabe_spec(3), c, ScheduleCase::kCase1), ThresholdError);
  }

  TEST_CASE("reverse-Hoelder implied constant for constant w has a closed form") {
    // u = 1 + |x|^2 with H = 0: w = Lap u + C1 = 6 on every node.
    ProblemSpec s = yamabe_spec(3);
    s.h = HModel::zero(3);
    const Grid g = Grid::uniform(s.box, 33);
    const EstimateConfig c = small_balls(3);
    const CheckReport r = reverse_holder_probe(bubble(g), s, c, ScheduleCase::kCase1);
    REQUIRE(r.implied_constant);
    const double beta = 1.5, q = c.q, e = q + 1.0;
    const double m1 = Region::ball(g, c.center, c.R + c.rho).measure();
    const double m2 = Region::ball(g, c.center, c.R + 3.0 * c.rho).measure();
    const double want = std::pow(6.0, q - e) * std::pow(m1, 1.0 / beta) * c.rho * c.rho / (q * m2);
    CHECK(*r.implied_constant == doctest::Approx(want).epsilon(1e-10));
    CHECK(r.details["C1"].get<double>() == 0.0);
    CHECK(r.kind == "probe");
  }

  TEST_CASE("log-space integral agrees with direct summation") {
    const Grid g = Grid::uniform(Box::cube(2, 0.0, 1.0), 9);
    const ScalarField w = ScalarField::sample(g, [](const Vec& x) { return 1.0 + x(0) + x(1) * x(1); });
    const Region all = Region::whole(g);
    for (double s : {1.0, 3.5, 40.0}) {
      double direct = 0.0;
      for (std::size_t i : all.nodes()) direct += all.weight(i) * std::pow(w[i], s);
      CHECK(log_integral_power(w, s, all) == doctest::Approx(std::log(direct)).epsilon(1e-13));
    }
    // Large exponents stay finite in log space.
    CHECK(std::isfinite(log_integral_power(w, 2000.0, all)));
    const ScalarField z = ScalarField::zeros(g);
    CHECK_THROWS_AS((void)log_integral_power(z, 2.0, all), DomainError);
  }

  TEST_CASE("sup-norm chain normalized norms increase toward the node maximum") {
    const Grid g = Grid::uniform(Box::cube(3, -0.5, 0.5), 33);
    const MoserSchedule m = moser_schedule(2, 3, parse_rational("4"), ScheduleCase::kCase1);
    const CheckReport flat = sup_norm_chain(bubble(g), yamabe_spec(3), m, small_balls(3));
    CHECK(flat.pass);
    for (double v : flat.details["normalized_norms"].get<std::vector<double>>()) CHECK(v == doctest::Approx(6.0));

    const CheckReport r = sup_norm_chain(perturbed(g), yamabe_spec(3), m, small_balls(3));
    CHECK(r.pass);
    const auto norms = r.details["normalized_norms"].get<std::vector<double>>();
    const double top = r.details["node_max"].get<double>();
    for (std::size_t j = 1; j < norms.size(); ++j) CHECK(norms[j] >= norms[j - 1]);
    for (double v : norms) CHECK(v <= top * (1.0 + 1e-12));
    CHECK(r.details["log_direct_max_relative_gap"].get<double>() <= 1e-10);

    const MoserSchedule other = moser_schedule(2, 4, parse_rational("5"), ScheduleCase::kCase1);
    CHECK_THROWS_AS((void)sup_norm_chain(bubble(g), yamabe_spec(3), other, small_balls(3)), ConfigError);
  }

  TEST_CASE("f tangent extension absorbs the second difference of f") {
    ProblemSpec s = yamabe_spec(3);
    s.f = ExprModel::parse("2 + 0.1*xisq - 0.05*z", 3);
    const Grid g = Grid::uniform(s.box, 17);
    const CheckReport r = f_xi_extension_check(perturbed(g), s, small_balls(3));
    CHECK(r.pass);
    CHECK(r.details["unabsorbed_nodes"].get<int>() == 0);
    CHECK(r.details["c_sigma_sampled"].get<double>() == 0.0);

    s.f = ExprModel::parse("2 - 0.1*xisq", 3);
    const CheckReport c = f_xi_extension_check(perturbed(g), s, small_balls(3));
    CHECK(c.pass);
    CHECK(c.details["c_sigma_sampled"].get<double>() == doctest::Approx(0.1).epsilon(1e-8));
  }

  TEST_CASE("estimates refuse the negative orientation") {
    ProblemSpec s = yamabe_spec(3);
    s.h = HModel::zero(3);
    s.sign = SignCase::kNegative;
    const Grid g = Grid::uniform(s.box, 17);
    CHECK_THROWS_AS((void)concavity_dq_check(bubble(g), s, small_balls(3)), ConfigError);
  }
}
