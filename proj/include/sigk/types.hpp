#pragma once

#include <Eigen/Dense>

namespace sigk {

inline constexpr int kMaxDim = 16;

/// Dense matrix with a fixed upper bound on the dimension, so per-node work avoids the heap.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

}  // namespace sigk
