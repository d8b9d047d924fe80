#pragma once

#include <stdexcept>
#include <string>

namespace sigk {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes, sizes or grids that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Eigenvalues left the Garding cone the operation requires.
class ConeViolation : public Error {
 public:
  using Error::Error;
};

/// Arguments outside the set where a model or formula is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration, expression or file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Exponent or parameter below a hard threshold of an estimate.
class ThresholdError : public Error {
 public:
  using Error::Error;
};

/// Iterative method stopped without meeting its goal.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace sigk
