#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wgmol {

/// Base of every error thrown by the toolkit. `exit_code()` is what the CLI
/// returns when the error escapes a task.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Bad input: parameter out of range, malformed config, unknown key.
class InvalidParameter : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Integrator tolerance failure, singular system, non-convergent fit.
class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// An analytic quantity has no solution for the given inputs
/// (e.g. magic power of an under-coupled transition).
class NoSolution : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

/// Non-fatal diagnostics accumulated by an operation.
using Warnings = std::vector<std::string>;

}  // namespace wgmol
