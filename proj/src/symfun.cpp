#include "sigk/symfun.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sigk/errors.hpp"

namespace sigk {

SymMat::SymMat(int n) {
  if (n < 1 || n > kMaxDim) {
    throw DimensionError("matrix dimension " + std::to_string(n) + " outside [1, 16]");
  }
  m_ = Mat::Zero(n, n);
}

SymMat SymMat::identity(int n) {
  SymMat s(n);
  s.m_.setIdentity();
  return s;
}

SymMat SymMat::diagonal(const std::vector<double>& d) {
  SymMat s(static_cast<int>(d.size()));
  for (int i = 0; i < s.dim(); ++i) s.m_(i, i) = d[i];
  return s;
}

SymMat SymMat::from_upper(const Mat& m) {
  if (m.rows() != m.cols()) throw DimensionError("matrix is not square");
  SymMat s(static_cast<int>(m.rows()));
  for (int j = 0; j < s.dim(); ++j) {
    for (int i = 0; i <= j; ++i) {
      s.m_(i, j) = m(i, j);
      s.m_(j, i) = m(i, j);
    }
  }
  return s;
}

void SymMat::set(int i, int j, double v) {
  if (i < 0 || j < 0 || i >= dim() || j >= dim()) throw DimensionError("index out of range");
  m_(i, j) = v;
  m_(j, i) = v;
}

SymMat& SymMat::operator+=(const SymMat& o) {
  if (o.dim() != dim()) throw DimensionError("dimension mismatch");
  m_ += o.m_;
  return *this;
}

SymMat& SymMat::operator-=(const SymMat& o) {
  if (o.dim() != dim()) throw DimensionError("dimension mismatch");
  m_ -= o.m_;
  return *this;
}

SymMat& SymMat::operator*=(double c) {
  m_ *= c;
  return *this;
}

SymMat operator+(SymMat a, const SymMat& b) { return a += b; }
SymMat operator-(SymMat a, const SymMat& b) { return a -= b; }
SymMat operator*(double c, SymMat a) { return a *= c; }

Vec elementary_symmetric(const Vec& lambda) {
  const int n = static_cast<int>(lambda.size());
  Vec e = Vec::Zero(n + 1);
  e(0) = 1.0;
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k >= 1; --k) e(k) += lambda(i) * e(k - 1);
  }
  return e;
}

Vec elementary_symmetric_without(const Vec& lambda, int skip) {
  const int n = static_cast<int>(lambda.size());
  Vec e = Vec::Zero(n);
  e(0) = 1.0;
  int used = 0;
  for (int i = 0; i < n; ++i) {
    if (i == skip) continue;
    ++used;
    for (int k = used; k >= 1; --k) e(k) += lambda(i) * e(k - 1);
  }
  return e;
}

Spectrum::Spectrum(const SymMat& a) : Spectrum(a.matrix()) {}

Spectrum::Spectrum(const Mat& symmetric) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetric);
  if (es.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
  values_ = es.eigenvalues();
  vectors_ = es.eigenvectors();
  esf_ = elementary_symmetric(values_);
  esf_abs_ = elementary_symmetric(values_.cwiseAbs());
}

void Spectrum::check_level(int k, int lo, int hi) const {
  if (k < lo || k > hi) {
    throw DimensionError("cone level " + std::to_string(k) + " outside [" + std::to_string(lo) +
                         ", " + std::to_string(hi) + "] for n = " + std::to_string(dim()));
  }
}

double Spectrum::sigma(int k) const {
  check_level(k, 0, dim());
  return esf_(k);
}

double Spectrum::sigma_abs(int k) const {
  check_level(k, 0, dim());
  return esf_abs_(k);
}

bool Spectrum::in_gamma(int k) const {
  check_level(k, 1, dim());
  for (int j = 1; j <= k; ++j) {
    if (!(esf_(j) > 0.0)) return false;
  }
  return true;
}

double Spectrum::cone_margin(int k) const {
  check_level(k, 1, dim());
  double m = esf_(1);
  for (int j = 2; j <= k; ++j) m = std::min(m, esf_(j));
  return m;
}

Vec Spectrum::newton_values(int k) const {
  check_level(k, 0, dim() - 1);
  // T_k shares eigenvectors with A; its i-th eigenvalue is sigma_k of the spectrum with lambda_i
  // removed, the closed form of T_k = sigma_k I - T_{k-1} A along each eigenvector.
  Vec t(dim());
  for (int i = 0; i < dim(); ++i) t(i) = elementary_symmetric_without(values_, i)(k);
  return t;
}

Mat Spectrum::from_values(const Vec& d) const {
  return vectors_ * d.asDiagonal() * vectors_.transpose();
}

Mat Spectrum::newton_tensor(int k) const { return from_values(newton_values(k)); }

Mat Spectrum::power(int p) const {
  if (p < 0) throw DomainError("negative matrix power");
  if (p == 0) return Mat::Identity(dim(), dim());
  Vec d(dim());
  for (int i = 0; i < dim(); ++i) d(i) = std::pow(values_(i), p);
  return from_values(d);
}

double sigma(int k, const SymMat& a) { return Spectrum(a).sigma(k); }

bool in_gamma_k(int k, const SymMat& a) { return Spectrum(a).in_gamma(k); }

SymMat newton_tensor(int k, const SymMat& a) {
  return SymMat::from_upper(Spectrum(a).newton_tensor(k));
}

SymMat grad_sigma(int k, const SymMat& a) {
  if (k < 1 || k > a.dim()) throw DimensionError("grad_sigma needs 1 <= k <= n");
  return newton_tensor(k - 1, a);
}

SymMat grad_sigma_k1k(int k, const SymMat& a) {
  Spectrum s(a);
  if (k < 1 || k > a.dim()) throw DimensionError("grad_sigma_k1k needs 1 <= k <= n");
  if (!s.in_gamma(k)) throw ConeViolation("grad_sigma_k1k: eigenvalues outside Gamma_k");
  const double sk = s.sigma(k);
  const double c = std::pow(sk, (1.0 - k) / k) / k;
  return SymMat::from_upper(c * s.newton_tensor(k - 1));
}

double quotient_chain_gap(int k, const SymMat& a) {
  Spectrum s(a);
  if (k < 2 || k > a.dim()) throw DimensionError("quotient_chain_gap needs 2 <= k <= n");
  if (!s.in_gamma(k)) throw ConeViolation("quotient_chain_gap: eigenvalues outside Gamma_k");
  double gap = INFINITY;
  for (int j = 2; j <= k; ++j) {
    // Both ratios are diagonal in the eigenbasis of A.
    const Vec hi = s.newton_values(j - 1) / s.sigma(j);
    const Vec lo = s.newton_values(j - 2) / s.sigma(j - 1);
    gap = std::min(gap, (hi - lo).minCoeff());
  }
  return gap;
}

double concavity_probe(int k, const SymMat& a, const SymMat& b, double t) {
  if (a.dim() != b.dim()) throw DimensionError("dimension mismatch");
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("t outside [0, 1]");
  Spectrum sa(a);
  Spectrum sb(b);
  if (!sa.in_gamma(k) || !sb.in_gamma(k)) {
    throw ConeViolation("concavity_probe: endpoint outside Gamma_k");
  }
  const double fa = std::pow(sa.sigma(k), 1.0 / k);
  const double fb = std::pow(sb.sigma(k), 1.0 / k);
  if (t == 0.0 || t == 1.0 || a.matrix() == b.matrix()) return 0.0;
  const Spectrum sm(((1.0 - t) * a.matrix() + t * b.matrix()).eval());
  return std::pow(sm.sigma(k), 1.0 / k) - (1.0 - t) * fa - t * fb;
}

double newton_complement_identity(int k, const SymMat& a) {
  const int n = a.dim();
  if (k < 2 || k > n) throw DimensionError("newton_complement_identity needs 2 <= k <= n");
  Spectrum s(a);
  const Mat tkm2 = s.newton_tensor(k - 2);
  const Mat tkm1 = s.newton_tensor(k - 1);
  const Mat r = tkm2 * a.matrix() + tkm1 -
                (tkm1.trace() / (n - k + 1)) * Mat::Identity(n, n);
  return r.cwiseAbs().maxCoeff();
}

double frobenius(const Mat& a, const Mat& b) { return a.cwiseProduct(b).sum(); }

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace sigk
