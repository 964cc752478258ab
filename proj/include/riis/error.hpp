#pragma once

#include <stdexcept>
#include <string>

namespace riis {

// Base for every failure raised by the library. The CLI maps the two
// families onto exit codes: InputError -> 1, NumericalError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Quadrature did not settle when the node count was doubled.
class AccuracyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Constant (zero-variance) series handed to an autocorrelation estimator.
class DegenerateSeriesError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Every importance weight is zero.
class EmptyOverlapError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Sampler could not get off its starting point during burn-in.
class InitializationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Annealer never produced a feasible proposal.
class StuckError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace riis
