#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "sigk/augmented.hpp"
#include "sigk/errors.hpp"
#include "sigk/expr.hpp"
#include "sigk/field_io.hpp"
#include "sigk/gridcalc.hpp"
#include "sigk/models.hpp"
#include "sigk/symfun.hpp"

using namespace sigk;

namespace {

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

ProblemSpec bubble_spec() {
  ProblemSpec s;
  s.n = 3;
  s.k = 2;
  s.box = Box::cube(3, -0.5, 0.5);
  s.h = HModel::positive_yamabe(3, 0.1);
  // A_u = (2/u) I, so sigma_2^{1/2}(A_u) = sqrt(3) * 2 / u.
  s.f = ExprModel::parse("2*sqrt(3)/z", 3);
  return s;
}

}  // namespace

TEST_SUITE("augmented") {
  TEST_CASE("expression models differentiate symbolically") {
    const ScalarModelPtr f = ExprModel::parse("x1*z + xisq + sin(x2)", 3);
    const Vec x = vec3(0.5, 1.0, -1.0);
    const Vec xi = vec3(1.0, -2.0, 0.5);
    const ScalarJet j = f->jet(x, 2.0, xi);
    CHECK(j.value == doctest::Approx(1.0 + 5.25 + std::sin(1.0)));
    CHECK(j.dx(0) == doctest::Approx(2.0));
    CHECK(j.dx(1) == doctest::Approx(std::cos(1.0)));
    CHECK(j.dz == doctest::Approx(0.5));
    CHECK(j.dxi(1) == doctest::Approx(-4.0));
    const Mat h = f->xi_hessian(x, 2.0, xi);
    CHECK((h - 2.0 * Mat::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-14);
  }

  TEST_CASE("expression parse errors are config errors") {
    CHECK_THROWS_AS((void)Expr::parse("x1 +", 3), ConfigError);
    CHECK_THROWS_AS((void)Expr::parse("x4", 3), ConfigError);
    CHECK_THROWS_AS((void)Expr::parse("foo(z)", 3), ConfigError);
  }

  TEST_CASE("positive Yamabe tensor and its domain") {
    const HModel h = HModel::positive_yamabe(3, 0.1);
    const Mat v = h.value(vec3(0, 0, 0), 2.0, vec3(1.0, 2.0, 2.0));
    CHECK((v - 2.25 * Mat::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(h.z_admissible(0.5));
    CHECK_FALSE(h.z_admissible(0.05));
    CHECK_THROWS_AS((void)h.value(vec3(0, 0, 0), 0.05, vec3(1, 0, 0)), DomainError);
    CHECK(h.h1(vec3(0, 0, 0), 2.0) == doctest::Approx(0.25));
  }

  TEST_CASE("bubble with closed-form derivatives has zero residual and full admissibility") {
    const ProblemSpec s = bubble_spec();
    const Grid g = Grid::uniform(s.box, 9);
    const ScalarField u = ScalarField::sample(g, [](const Vec& x) { return 1.0 + x.squaredNorm(); });
    VectorField grad(g, 3);
    MatrixField hess(g, 3);
    for (std::size_t i = 0; i < g.size(); ++i) {
      grad.set(i, 2.0 * g.node(i));
      hess.set(i, 2.0 * Mat::Identity(3, 3));
    }
    const AugmentedField aug = augment(u, grad, hess, s);
    const ResidualField r = residual_field(aug, s);
    CHECK(r.max_abs(Region::whole(g)) <= 1e-12);
    CHECK(r.failures(Region::whole(g)) == 0);
    const AdmissibilityMap m = admissibility_map(aug, s.k);
    CHECK(m.all(Region::whole(g)));
    // margin = min(sigma_1, sigma_2) of (2/u) I, smallest at the corners u = 1.75.
    CHECK(m.min_margin(Region::whole(g)) == doctest::Approx(std::min(6.0 / 1.75, 12.0 / (1.75 * 1.75))));
  }

  TEST_CASE("stencil augment agrees with closed form on quadratics") {
    const ProblemSpec s = bubble_spec();
    const Grid g = Grid::uniform(s.box, 9);
    const ScalarField u = ScalarField::sample(g, [](const Vec& x) { return 1.0 + x.squaredNorm(); });
    const ResidualField r = residual_field(u, s);
    CHECK(r.max_abs(Region::whole(g)) <= 1e-10);
  }

  TEST_CASE("negative orientation flips the augmented Hessian") {
    ProblemSpec s;
    s.n = 3;
    s.k = 2;
    s.box = Box::cube(3, -0.5, 0.5);
    s.h = HModel::zero(3);
    s.f = ExprModel::constant(std::sqrt(3.0), 3);
    s.sign = SignCase::kNegative;
    const Grid g = Grid::uniform(s.box, 5);
    const ScalarField u = ScalarField::sample(g, [](const Vec& x) { return 1.0 - 0.5 * x.squaredNorm(); });
    const MatrixField a = a_h_field(u, s);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(a(i, 0, 0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(residual_field(u, s).max_abs(Region::whole(g)) <= 1e-10);
  }

  TEST_CASE("C1 takes the larger of the two lower bounds") {
    ProblemSpec s;
    s.n = 3;
    s.k = 2;
    s.box = Box::cube(3, -0.5, 0.5);
    s.f = ExprModel::constant(1.0, 3);
    const Grid g = Grid::uniform(s.box, 5);
    // Hessian 0.1 I: Lap = 0.3, so C1 = 1 - 0.3.
    const ScalarField small = ScalarField::sample(g, [](const Vec& x) { return 0.05 * x.squaredNorm(); });
    CHECK(compute_c1(augment(small, s), Region::whole(g)) == doctest::Approx(0.7).epsilon(1e-10));
    // Hessian diag(4, -1, 2): in Gamma_2, Lap = 5 >= |hess| = 4 and Lap >= 1, so C1 = 0.
    const ScalarField mixed = ScalarField::sample(
        g, [](const Vec& x) { return 2.0 * x(0) * x(0) - 0.5 * x(1) * x(1) + x(2) * x(2); });
    CHECK(compute_c1(augment(mixed, s), Region::whole(g)) == doctest::Approx(0.0).epsilon(1e-10));
    // Outside Gamma_2.
    const ScalarField bad = ScalarField::sample(g, [](const Vec& x) { return x(0) * x(0) - 2.0 * x(1) * x(1); });
    CHECK_THROWS_AS((void)compute_c1(augment(bad, s), Region::whole(g)), ConeViolation);
  }

  TEST_CASE("C_Sigma of convex and concave models") {
    EvalBox box;
    box.center = Vec::Zero(3);
    box.radius = 0.5;
    box.z_lo = 0.5;
    box.z_hi = 2.0;
    box.xi_radius = 1.0;
    CHECK(compute_c_sigma(HModel::zero(3), box).with_safety == 0.0);
    CHECK(compute_c_sigma(HModel::positive_yamabe(3, 0.1), box).sampled == doctest::Approx(0.0).epsilon(1e-8));
    // 1 - |xi|^2 has xi-Hessian -2 I: C = 1.
    const CSigma c = compute_c_sigma(*ExprModel::parse("1 - xisq", 3), box);
    CHECK(c.sampled == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(c.with_safety == doctest::Approx(1.25).epsilon(1e-10));
    CHECK(compute_c_sigma(*ExprModel::parse("1 + xisq", 3), box).sampled == 0.0);
    CHECK(compute_c_sigma(*ExprModel::parse("1 / (1 + xisq)", 3), box).sampled > 0.0);
    CHECK(c.samples > 0);
  }

  TEST_CASE("eval box covers the sampled field") {
    const ProblemSpec s = bubble_spec();
    const Grid g = Grid::uniform(s.box, 9);
    const ScalarField u = ScalarField::sample(g, [](const Vec& x) { return 1.0 + x.squaredNorm(); });
    const AugmentedField aug = augment(u, s);
    const Region inner = Region::interior(g, 0.125);
    const EvalBox b = eval_box_for(aug, inner);
    for (std::size_t i : inner.nodes()) CHECK(b.contains(g.node(i), u[i], aug.grad.at(i)));
  }

  TEST_CASE("negative_to_positive reflects the field and the model") {
    const Grid g = Grid::uniform(Box::cube(3, -0.5, 0.5), 5);
    const ScalarField u = ScalarField::sample(g, [](const Vec& x) { return 2.0 + x(0); });
    const ScalarModelPtr f = ExprModel::parse("z + xi1", 3);
    const auto [w, fw] = negative_to_positive(u, f);
    CHECK(w[3] == doctest::Approx(-u[3]));
    CHECK(fw->value(vec3(0, 0, 0), 1.0, vec3(2.0, 0, 0)) == doctest::Approx(-3.0));
    const ScalarField mixed = ScalarField::sample(g, [](const Vec& x) { return x(0); });
    CHECK_THROWS_AS((void)negative_to_positive(mixed, f), DomainError);
  }

  TEST_CASE("spec JSON round trip and validation") {
    const nlohmann::json j = {{"n", 3},
                              {"k", 2},
                              {"box", {{"lo", {-1, -1, -1}}, {"hi", 1}}},
                              {"h_model", {{"variant", "ScalarQuadratic"}, {"params", {{"H1", "0.5 + 0*z"}}}}},
                              {"f_model", {{"expression", "1 + xisq"}}}};
    const ProblemSpec s = spec_from_json(j);
    CHECK(s.h.variant() == HVariant::kScalarQuadratic);
    CHECK(s.box.lo[2] == -1.0);
    CHECK(s.box.hi[0] == 1.0);
    const ProblemSpec t = spec_from_json(to_json(s));
    CHECK(t.k == 2);
    CHECK(t.f->value(vec3(0, 0, 0), 1.0, vec3(1, 1, 0)) == doctest::Approx(3.0));
    nlohmann::json bad = j;
    bad["h_model"]["variant"] = "Nope";
    CHECK_THROWS_AS((void)spec_from_json(bad), ConfigError);
    bad = j;
    bad.erase("f_model");
    CHECK_THROWS_AS((void)spec_from_json(bad), ConfigError);
    bad = j;
    bad["f_model"] = {{"builtin", "bubble-positive"}};
    CHECK_THROWS_AS((void)spec_from_json(bad), ConfigError);
  }

  TEST_CASE("field CSV round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "sigk_field_io_test";
    std::filesystem::create_directories(dir);
    const Grid g(Box{{-1.0, 0.0}, {1.0, 2.0}}, {5, 7});
    const ScalarField u = ScalarField::sample(g, [](const Vec& x) { return std::sin(x(0)) + 1.0 / 3.0 * x(1); });
    const std::string path = (dir / "u.csv").string();
    write_field_csv(path, u);
    const ScalarField v = read_field_csv(path);
    CHECK(v.grid() == g);
    CHECK(v.values() == u.values());
    write_field_sidecar((dir / "u.json").string(), u, "unit test");
    CHECK(std::filesystem::exists(dir / "u.json"));
    CHECK_THROWS_AS((void)read_field_csv((dir / "missing.csv").string()), ConfigError);
  }
}
