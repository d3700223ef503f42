#pragma once

#include <stdexcept>
#include <string>

namespace fforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents or channel counts that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A layer or network configuration that cannot produce a valid geometry.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied data violates a precondition (range, size, divisibility).
class InputError : public Error {
 public:
  using Error::Error;
};

/// An image or checkpoint file could not be decoded.
class DecodeError : public InputError {
 public:
  using InputError::InputError;
};

class DatasetError : public InputError {
 public:
  using InputError::InputError;
};

/// API misuse, e.g. backward() on a non-scalar.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A loss or activation became non-finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace fforge
