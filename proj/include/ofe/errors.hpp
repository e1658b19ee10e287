#pragma once

#include <stdexcept>
#include <string>

namespace ofe {

/// Invalid shapes, dimensions, or configuration values. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN/Inf produced by a forward or backward pass, or divergence of training.
/// Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation called in a state where it is undefined (empty buffer,
/// stepping a terminated episode, train-mode batch norm on a single row).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ofe
