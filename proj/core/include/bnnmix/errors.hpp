#pragma once

#include <stdexcept>
#include <string>

namespace bnnmix {

/// Bad shapes, dimensions or out-of-range parameters supplied by the caller.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values or a failed factorization during evaluation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested construction has no solution for the given data.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bnnmix
