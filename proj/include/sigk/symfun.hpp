#pragma once

#include <vector>

#include "sigk/types.hpp"

namespace sigk {

/// Real symmetric n x n matrix. Writes go through set(), which mirrors the entry.
class SymMat {
 public:
  explicit SymMat(int n);

  static SymMat identity(int n);
  static SymMat diagonal(const std::vector<double>& d);
  /// Builds from the upper triangle of m; the lower triangle is ignored.
  static SymMat from_upper(const Mat& m);

  [[nodiscard]] int dim() const { return static_cast<int>(m_.rows()); }
  [[nodiscard]] double operator()(int i, int j) const { return m_(i, j); }
  void set(int i, int j, double v);
  [[nodiscard]] const Mat& matrix() const { return m_; }

  SymMat& operator+=(const SymMat& o);
  SymMat& operator-=(const SymMat& o);
  SymMat& operator*=(double c);

 private:
  Mat m_;
};

SymMat operator+(SymMat a, const SymMat& b);
SymMat operator-(SymMat a, const SymMat& b);
SymMat operator*(double c, SymMat a);

/// Elementary symmetric polynomials e_0..e_n of the entries of lambda.
Vec elementary_symmetric(const Vec& lambda);
/// e_k of lambda with entry `skip` removed, for k = 0..n-1.
Vec elementary_symmetric_without(const Vec& lambda, int skip);

/// Eigen-decomposition reused across sigma_k, Newton tensors and matrix powers.
class Spectrum {
 public:
  explicit Spectrum(const SymMat& a);
  explicit Spectrum(const Mat& symmetric);

  [[nodiscard]] int dim() const { return static_cast<int>(values_.size()); }
  [[nodiscard]] const Vec& values() const { return values_; }
  [[nodiscard]] const Mat& vectors() const { return vectors_; }

  [[nodiscard]] double sigma(int k) const;
  /// sigma_k of |lambda|; bounds every monomial of sigma_k, used as a rounding scale.
  [[nodiscard]] double sigma_abs(int k) const;
  [[nodiscard]] bool in_gamma(int k) const;
  /// min_{1<=j<=k} sigma_j.
  [[nodiscard]] double cone_margin(int k) const;
  /// Eigenvalues of T_k(A) in the eigenbasis order.
  [[nodiscard]] Vec newton_values(int k) const;
  [[nodiscard]] Mat newton_tensor(int k) const;
  [[nodiscard]] Mat power(int p) const;
  [[nodiscard]] Mat from_values(const Vec& d) const;

 private:
  void check_level(int k, int lo, int hi) const;

  Vec values_;
  Mat vectors_;
  Vec esf_;
  Vec esf_abs_;
};

[[nodiscard]] double sigma(int k, const SymMat& a);
[[nodiscard]] bool in_gamma_k(int k, const SymMat& a);
/// T_k(A), with T_0 = I and T_k = sigma_k I - T_{k-1} A.
[[nodiscard]] SymMat newton_tensor(int k, const SymMat& a);
/// d sigma_k / dA = T_{k-1}(A).
[[nodiscard]] SymMat grad_sigma(int k, const SymMat& a);
/// d sigma_k^{1/k} / dA. Throws ConeViolation outside Gamma_k.
[[nodiscard]] SymMat grad_sigma_k1k(int k, const SymMat& a);
/// min over j = 2..k of lambda_min(T_{j-1}/sigma_j - T_{j-2}/sigma_{j-1}).
[[nodiscard]] double quotient_chain_gap(int k, const SymMat& a);
/// sigma_k^{1/k}((1-t)A + tB) - (1-t) sigma_k^{1/k}(A) - t sigma_k^{1/k}(B).
[[nodiscard]] double concavity_probe(int k, const SymMat& a, const SymMat& b, double t);
/// max-norm of T_{k-2}(A)A + T_{k-1}(A) - tr(T_{k-1}(A))/(n-k+1) I.
[[nodiscard]] double newton_complement_identity(int k, const SymMat& a);

/// Frobenius inner product.
[[nodiscard]] double frobenius(const Mat& a, const Mat& b);
[[nodiscard]] double binomial(int n, int k);

}  // namespace sigk
