#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sigk/errors.hpp"
#include "sigk/sampling.hpp"
#include "sigk/symfun.hpp"

using namespace sigk;

namespace {

SymMat sym(const oracle::Dense& a) { return SymMat::from_upper(Mat(a)); }

}  // namespace

TEST_SUITE("symfun") {
  TEST_CASE("sigma_k of the identity is a binomial coefficient") {
    for (int n = 1; n <= 6; ++n) {
      const Spectrum s(SymMat::identity(n));
      for (int k = 0; k <= n; ++k) CHECK(s.sigma(k) == doctest::Approx(binomial(n, k)).epsilon(1e-14));
    }
  }

  TEST_CASE("sigma_k and Newton tensors of diag(1, 2, 3)") {
    const SymMat a = SymMat::diagonal({1.0, 2.0, 3.0});
    CHECK(sigma(1, a) == doctest::Approx(6.0));
    CHECK(sigma(2, a) == doctest::Approx(11.0));
    CHECK(sigma(3, a) == doctest::Approx(6.0));
    const SymMat t1 = newton_tensor(1, a);
    CHECK(t1(0, 0) == doctest::Approx(5.0));
    CHECK(t1(1, 1) == doctest::Approx(4.0));
    CHECK(t1(2, 2) == doctest::Approx(3.0));
    CHECK(t1(0, 1) == doctest::Approx(0.0));
    // T_2 eigenvalues: products of the two other entries.
    const SymMat t2 = newton_tensor(2, a);
    CHECK(t2(0, 0) == doctest::Approx(6.0));
    CHECK(t2(1, 1) == doctest::Approx(3.0));
    CHECK(t2(2, 2) == doctest::Approx(2.0));
  }

  TEST_CASE("elementary_symmetric_without drops one entry") {
    Vec l(4);
    l << 1.0, -2.0, 3.0, 0.5;
    const Vec e = elementary_symmetric_without(l, 1);
    CHECK(e(0) == doctest::Approx(1.0));
    CHECK(e(1) == doctest::Approx(4.5));
    CHECK(e(2) == doctest::Approx(1.0 * 3.0 + 1.0 * 0.5 + 3.0 * 0.5));
    CHECK(e(3) == doctest::Approx(1.5));
  }

  TEST_CASE("sigma_k matches the principal-minor oracle on random matrices") {
    oracle::Gen gen(11);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 2 + trial % 5;
      oracle::Dense a(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) a(i, j) = a(j, i) = gen.uniform(-2.0, 2.0);
      }
      const Spectrum s(sym(a));
      for (int k = 0; k <= n; ++k) {
        const double ref = oracle::esf_by_minors(a, k);
        CHECK(std::abs(s.sigma(k) - ref) <= 1e-12 * std::max(1.0, s.sigma_abs(k)) * binomial(n, k));
      }
    }
  }

  TEST_CASE("Newton tensor matches the dense recursion oracle") {
    oracle::Gen gen(12);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + trial % 5;
      const oracle::Dense a = gen.gamma_k(n, 1 + trial % n);
      for (int k = 0; k < n; ++k) {
        const oracle::Dense ref = oracle::newton_by_recursion(a, k);
        const Mat got = newton_tensor(k, sym(a)).matrix();
        const double scale = binomial(n, k) * std::pow(std::max(1.0, a.norm()), k);
        CHECK((got - Mat(ref)).cwiseAbs().maxCoeff() <= 1e-11 * scale);
      }
    }
  }

  TEST_CASE("T_n vanishes (Cayley-Hamilton)") {
    oracle::Gen gen(13);
    for (int n = 2; n <= 6; ++n) {
      const oracle::Dense a = gen.gamma_k(n, 1);
      const oracle::Dense t = oracle::newton_by_recursion(a, n);
      CHECK(t.cwiseAbs().maxCoeff() <= 1e-10 * std::pow(1.0 + a.norm(), n));
    }
  }

  TEST_CASE("grad_sigma and grad_sigma_k1k match central differences") {
    oracle::Gen gen(14);
    for (int trial = 0; trial < 60; ++trial) {
      const int n = 2 + trial % 5;
      const int k = 1 + trial % n;
      const oracle::Dense a = gen.gamma_k(n, k, 0.5);
      const SymMat g = grad_sigma(k, sym(a));
      const SymMat g1 = grad_sigma_k1k(k, sym(a));
      const auto f = [k](const oracle::Dense& m) { return oracle::esf_by_minors(m, k); };
      const auto f1 = [k](const oracle::Dense& m) { return std::pow(oracle::esf_by_minors(m, k), 1.0 / k); };
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const double mult = i == j ? 0.5 : 1.0;  // the oracle perturbs (i,j) and (j,i)
          const double fd = mult * oracle::sym_fd(f, a, i, j, 1e-5);
          const double fd1 = mult * oracle::sym_fd(f1, a, i, j, 1e-5);
          const double want = (i == j ? 1.0 : 2.0) * mult;
          CHECK(std::abs(fd - want * g(i, j)) <= 1e-6 * g.matrix().cwiseAbs().maxCoeff());
          CHECK(std::abs(fd1 - want * g1(i, j)) <= 1e-6 * g1.matrix().cwiseAbs().maxCoeff());
        }
      }
    }
  }

  TEST_CASE("grad_sigma_k1k refuses matrices outside the cone") {
    const SymMat a = SymMat::diagonal({1.0, -3.0, 0.5});
    CHECK_FALSE(in_gamma_k(1, a));
    CHECK_THROWS_AS((void)grad_sigma_k1k(2, a), ConeViolation);
    CHECK_THROWS_AS((void)quotient_chain_gap(2, a), ConeViolation);
  }

  TEST_CASE("level checks reject k outside the range") {
    const SymMat a = SymMat::identity(3);
    CHECK_THROWS_AS((void)sigma(4, a), DimensionError);
    CHECK_THROWS_AS((void)newton_tensor(3, a), DimensionError);
    CHECK_THROWS_AS((void)grad_sigma(0, a), DimensionError);
  }

  TEST_CASE("cone membership and margin") {
    const Spectrum s(SymMat::diagonal({3.0, 1.0, -0.5}));
    CHECK(s.in_gamma(1));
    CHECK(s.in_gamma(2));  // sigma_2 = 3 - 1.5 - 0.5 = 1
    CHECK_FALSE(s.in_gamma(3));
    CHECK(s.cone_margin(2) == doctest::Approx(1.0));
  }

  TEST_CASE("property: trace and Euler identities on generated Gamma_k matrices") {
    oracle::Gen gen(15);
    for (int trial = 0; trial < 300; ++trial) {
      const int n = 2 + trial % 5;
      const int k = 2 + trial % (n - 1);
      const oracle::Dense a = gen.gamma_k(n, k, gen.uniform(0.01, 1.0));
      const Spectrum s(sym(a));
      const double scale = binomial(n, k) * std::pow(std::max(1.0, a.norm()), k);
      if (k < n) CHECK(std::abs(s.newton_tensor(k).trace() - (n - k) * s.sigma(k)) <= 1e-12 * n * scale);
      CHECK(std::abs(frobenius(s.newton_tensor(k - 1), Mat(a)) - k * s.sigma(k)) <= 1e-12 * k * scale);
      CHECK(newton_complement_identity(k, sym(a)) <= 1e-12 * scale);
    }
  }

  TEST_CASE("property: quotient chain and concavity are nonnegative") {
    oracle::Gen gen(16);
    for (int trial = 0; trial < 300; ++trial) {
      const int n = 2 + trial % 5;
      const int k = 2 + trial % (n - 1);
      const oracle::Dense a = gen.gamma_k(n, k, gen.uniform(0.01, 1.0));
      const oracle::Dense b = gen.gamma_k(n, k, gen.uniform(0.01, 1.0));
      CHECK(quotient_chain_gap(k, sym(a)) >= -1e-10);
      CHECK(concavity_probe(k, sym(a), sym(b), gen.uniform(0.0, 1.0)) >= -1e-10);
    }
  }

  TEST_CASE("concavity probe is zero at the endpoints") {
    const SymMat a = SymMat::diagonal({1.0, 2.0, 3.0});
    const SymMat b = SymMat::identity(3);
    CHECK(concavity_probe(2, a, b, 0.0) == 0.0);
    CHECK(concavity_probe(2, a, b, 1.0) == 0.0);
    CHECK_THROWS_AS((void)concavity_probe(2, a, b, 1.5), DomainError);
  }

  TEST_CASE("MatrixSampler is reproducible and lands in the requested set") {
    MatrixSampler s1(5), s2(5);
    for (int i = 0; i < 50; ++i) {
      const SymMat a = s1.gamma_k(4, 3);
      const SymMat b = s2.gamma_k(4, 3);
      CHECK(a.matrix() == b.matrix());
      CHECK(in_gamma_k(3, a));
      const SymMat c = s1.gamma_k(4, 2, ConeSample::kBoundary);
      CHECK(in_gamma_k(2, c));
      CHECK_FALSE(in_gamma_k(3, c));
      s2.gamma_k(4, 2, ConeSample::kBoundary);
      const Spectrum d(s1.gamma_k(4, 2, ConeSample::kInterior));
      CHECK(d.values().minCoeff() >= 0.1 - 1e-12);
      s2.gamma_k(4, 2, ConeSample::kInterior);
    }
    CHECK_THROWS_AS((void)s1.gamma_k(3, 3, ConeSample::kBoundary), DomainError);
  }
}
