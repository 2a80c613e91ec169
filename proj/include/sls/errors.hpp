#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sls {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Byte stream does not follow the SLSF layout (bad magic, truncation, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Well-formed data that breaks a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Caller passed arguments outside an operation's preconditions.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure in the optimisation path (exit code 3 at the CLI).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An affinity row whose bandwidth cannot be calibrated.
class DegenerateRowError : public NumericalError {
 public:
  DegenerateRowError(std::size_t row, const std::string& what)
      : NumericalError("degenerate affinity row " + std::to_string(row) + ": " + what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace sls
