#pragma once

#include <stdexcept>
#include <string>

namespace rrn {

/// Base for every error raised by the library. The CLI maps the concrete
/// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor dimensions do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or argument values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, truncated or otherwise invalid files and datasets.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A NaN/Inf showed up in a value or a loss.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace rrn
