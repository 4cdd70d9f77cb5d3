#pragma once

#include <stdexcept>
#include <string>

namespace derivstab {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A descriptor, map, control function or scenario violated a construction
/// invariant (associativity, unit axioms, p < 1, range limits, ...).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// Elements from different algebras/bimodules were combined.
class HandleMismatch : public Error {
 public:
  using Error::Error;
};

/// An iterative kernel hit its iteration cap.
class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

/// Materializing a scaled value would overflow double range.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// The assembled real-linear map failed to commute with multiplication by i.
class ContaminationError : public Error {
 public:
  ContaminationError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Malformed configuration text.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace derivstab
