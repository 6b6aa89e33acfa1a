#pragma once

#include <stdexcept>
#include <string>

namespace irs {

/// Operand shapes do not fit the operation (mode out of range, column
/// mismatch, wrong vector length, ...).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A scenario configuration violates one of its identifiability conditions
/// or could not be parsed.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite iterates, zero inputs to a factorization, or rank deficiency
/// discovered while estimating.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EstimationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace irs
