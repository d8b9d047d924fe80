#pragma once

#include <cstdint>
#include <random>

#include "sigk/symfun.hpp"

namespace sigk {

enum class ConeSample {
  kAny,       // lambda in Gamma_k
  kBoundary,  // lambda in Gamma_k but not Gamma_{k+1}
  kInterior,  // lambda in Gamma_n with lambda_min >= 0.1
};

/// Seeded generator of random symmetric matrices for property tests.
class MatrixSampler {
 public:
  explicit MatrixSampler(std::uint64_t seed) : rng_(seed) {}

  /// Entries uniform in [-bound, bound], symmetrized.
  SymMat uniform(int n, double bound = 2.0);
  /// Symmetrized standard Gaussian entries.
  SymMat gaussian(int n);
  /// Gaussian matrix shifted by a random multiple of I, rejected until it lands in the requested set.
  SymMat gamma_k(int n, int k, ConeSample mode = ConeSample::kAny);

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace sigk
