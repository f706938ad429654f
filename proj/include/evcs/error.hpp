#pragma once

#include <stdexcept>
#include <string>

namespace evcs {

/// Violated precondition on an in-memory call (bad action, bad dimension, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data: files, configs, models.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Divergence or non-finite values during learning.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace evcs
