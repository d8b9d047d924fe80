#include "sigk/sampling.hpp"

#include <string>

#include "sigk/errors.hpp"

namespace sigk {

SymMat MatrixSampler::uniform(int n, double bound) {
  std::uniform_real_distribution<double> d(-bound, bound);
  SymMat a(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) a.set(i, j, d(rng_));
  }
  return a;
}

SymMat MatrixSampler::gaussian(int n) {
  std::normal_distribution<double> d(0.0, 1.0);
  Mat g(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) g(i, j) = d(rng_);
  }
  return SymMat::from_upper((0.5 * (g + g.transpose())).eval());
}

SymMat MatrixSampler::gamma_k(int n, int k, ConeSample mode) {
  if (k < 1 || k > n) throw DimensionError("gamma_k sampler needs 1 <= k <= n");
  if (mode == ConeSample::kBoundary && k == n) {
    throw DomainError("no Gamma_k \\ Gamma_{k+1} samples when k = n");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    SymMat g = gaussian(n);
    const Spectrum s(g);
    const double lmin = s.values().minCoeff();
    const double mean = s.values().mean();
    double shift;
    if (mode == ConeSample::kInterior) {
      shift = 0.1 - lmin + unit(rng_);
    } else {
      // Between the shift where sigma_1 vanishes and the one that makes A positive definite.
      shift = -mean + unit(rng_) * (0.1 - lmin + mean);
    }
    SymMat a = g + shift * SymMat::identity(n);
    const Spectrum sa(a);
    if (!sa.in_gamma(k)) continue;
    if (mode == ConeSample::kBoundary && sa.in_gamma(k + 1)) continue;
    return a;
  }
  throw Error("gamma_k sampler: rejection budget exhausted for n = " + std::to_string(n) +
              ", k = " + std::to_string(k));
}

}  // namespace sigk
