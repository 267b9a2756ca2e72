#pragma once

#include <stdexcept>
#include <string>

namespace angiorecon {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: out-of-range parameters, shape mismatches, malformed files.
/// The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated on-disk data.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Failure that only shows up while computing: degenerate projections,
/// non-finite losses. The CLI maps these to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace angiorecon
