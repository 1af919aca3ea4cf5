#pragma once

#include <stdexcept>
#include <string>

namespace naps {

// Base class for every error this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller passed structurally invalid input (out-of-range id, bad config, ...).
struct InputError : Error {
  using Error::Error;
};

// A file could not be parsed; message carries file name and 1-based line.
struct ParseError : Error {
  using Error::Error;
};

// A requested statistic has no defined value (e.g. homophily with no edges).
struct UndefinedValueError : Error {
  using Error::Error;
};

// Not enough calibration mass to form a threshold (empty scores, zero weights).
struct InsufficientCalibrationError : Error {
  using Error::Error;
};

// A probability row is degenerate where positive mass is required.
struct DegenerateDistributionError : Error {
  using Error::Error;
};

}  // namespace naps
