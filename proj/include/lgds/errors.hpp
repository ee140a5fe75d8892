#pragma once

#include <stdexcept>
#include <string>

namespace lgds {

// Base for all library errors so callers can catch everything in one clause.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};
struct NotSymmetric : Error {
  using Error::Error;
};
struct NotPositiveDefinite : Error {
  using Error::Error;
};
struct NoConvergence : Error {
  using Error::Error;
};
struct BadActionIndex : Error {
  using Error::Error;
};
struct InsufficientHistory : Error {
  using Error::Error;
};
// Raised when no action's steady-state error covariance upper-bounds all the
// others in the positive semidefinite order. Callers that only need *some*
// dominating matrix can fall back to the stationary state covariance; see
// make_modified_kalman().
struct NoDominatingCovariance : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace lgds
