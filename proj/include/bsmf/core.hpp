// Shared matrix aliases and error types.
#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace bsmf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised for shape mismatches, out-of-range parameters and malformed inputs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a sampler is asked for a law that does not exist (e.g. uniform
/// over the nonnegative orthant).
class UnsupportedDomain : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Raised when a factorization fails or an iterate stops being finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bsmf
