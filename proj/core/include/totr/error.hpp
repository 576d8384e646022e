#pragma once

#include <stdexcept>
#include <string>

namespace totr {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents or layouts that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (files, configs, motion sequences).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numeric procedure could not produce a trustworthy result
/// (singular systems, non-finite values).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace totr
