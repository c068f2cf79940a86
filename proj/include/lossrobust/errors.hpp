#pragma once

#include <stdexcept>
#include <string>

namespace lossrobust {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument violates a documented precondition (nonpositive precision, k1 >= k2, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Quadrature or minimization failed to converge, or produced a non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// No interior minimum could be bracketed.
class BracketError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// The posterior or a regression is degenerate (zero likelihood, nonpositive log input).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// D02 l(theta, d) vanishes or does not exist where the limit theory needs it.
class SingularError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A structural precondition between inputs fails (e.g. minimizers differ).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// I <= S ordering broken beyond numerical noise.
class BandViolation : public Error {
 public:
  using Error::Error;
};

// An experiment had too many failed replications.
class ExperimentError : public Error {
 public:
  using Error::Error;
};

}  // namespace lossrobust
