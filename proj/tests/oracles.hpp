#pragma once

// Test-side reference implementations, independent of the library's eigenvalue paths.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Dense = Eigen::MatrixXd;

/// sigma_k as the sum of k x k principal minors.
inline double esf_by_minors(const Dense& a, int k) {
  const int n = static_cast<int>(a.rows());
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  double total = 0.0;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    Dense sub(k, k);
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) sub(r, c) = a(idx[r], idx[c]);
    }
    total += sub.determinant();
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == n - k + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
  }
  return total;
}

/// T_k = sigma_k I - T_{k-1} A with sigma from principal minors.
inline Dense newton_by_recursion(const Dense& a, int k) {
  const int n = static_cast<int>(a.rows());
  Dense t = Dense::Identity(n, n);
  for (int j = 1; j <= k; ++j) t = esf_by_minors(a, j) * Dense::Identity(n, n) - t * a;
  return t;
}

/// Hand-rolled generator of symmetric matrices with a prescribed spectrum.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

  Dense orthogonal(int n) {
    Dense g(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) g(i, j) = normal();
    }
    Eigen::HouseholderQR<Dense> qr(g);
    return qr.householderQ() * Dense::Identity(n, n);
  }

  Dense with_spectrum(const Eigen::VectorXd& lambda) {
    const Dense q = orthogonal(static_cast<int>(lambda.size()));
    Dense a = q * lambda.asDiagonal() * q.transpose();
    return 0.5 * (a + a.transpose());
  }

  /// Spectrum in Gamma_k: random entries, then the smallest shift along (1,...,1) that enters Gamma_k
  /// plus a positive margin.
  Eigen::VectorXd gamma_k_spectrum(int n, int k, double margin = 0.2) {
    Eigen::VectorXd l(n);
    for (int i = 0; i < n; ++i) l(i) = uniform(-2.0, 2.0);
    double lo = -10.0, hi = 10.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (in_gamma(l.array() + mid, k) ? hi : lo) = mid;
    }
    return (l.array() + hi + margin).matrix();
  }

  Dense gamma_k(int n, int k, double margin = 0.2) { return with_spectrum(gamma_k_spectrum(n, k, margin)); }

  std::mt19937_64& engine() { return rng_; }

  static bool in_gamma(const Eigen::VectorXd& l, int k) {
    const Dense d = l.asDiagonal();
    for (int j = 1; j <= k; ++j) {
      if (!(esf_by_minors(d, j) > 0.0)) return false;
    }
    return true;
  }

 private:
  std::mt19937_64 rng_;
};

/// Central difference of f along the symmetric direction E_ij + E_ji (or E_ii).
inline double sym_fd(const std::function<double(const Dense&)>& f, const Dense& a, int i, int j, double h) {
  Dense e = Dense::Zero(a.rows(), a.cols());
  e(i, j) = 1.0;
  e(j, i) = 1.0;
  return (f(a + h * e) - f(a - h * e)) / (2.0 * h);
}

}  // namespace oracle
