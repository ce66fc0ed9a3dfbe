#pragma once

#include <stdexcept>
#include <string>

namespace wkelly {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid inputs detected before any numerical work starts.
struct ValidationError : Error {
  using Error::Error;
};

struct NegativeWeight : ValidationError {
  using ValidationError::ValidationError;
};

struct SumMismatch : ValidationError {
  using ValidationError::ValidationError;
};

struct DomainError : ValidationError {
  using ValidationError::ValidationError;
};

struct DimensionMismatch : ValidationError {
  using ValidationError::ValidationError;
};

struct UnsupportedOrder : ValidationError {
  using ValidationError::ValidationError;
};

struct DegenerateData : ValidationError {
  using ValidationError::ValidationError;
};

struct LengthMismatch : ValidationError {
  using ValidationError::ValidationError;
};

struct InsufficientData : ValidationError {
  using ValidationError::ValidationError;
};

/// An iterative routine failed to reach its tolerance.
struct NumericFailure : Error {
  using Error::Error;
};

/// A 1-D search bracket could not be expanded to contain the maximizer.
struct BracketTooNarrow : NumericFailure {
  using NumericFailure::NumericFailure;
};

/// Portfolio value hit zero or below during simulation.
struct Ruin : Error {
  explicit Ruin(int period_arg)
      : Error("portfolio ruined at period " + std::to_string(period_arg)),
        period(period_arg) {}
  int period;  // 1-based index of the first ruin period
};

/// File-content errors carry file/line/column context in the message.
struct ParseError : ValidationError {
  using ValidationError::ValidationError;
};

struct NonPositivePrice : ValidationError {
  using ValidationError::ValidationError;
};

struct NonMonotoneDates : ValidationError {
  using ValidationError::ValidationError;
};

struct MissingValue : ValidationError {
  using ValidationError::ValidationError;
};

/// Filesystem-level failure (open/read/write), as opposed to content errors.
struct IoError : Error {
  using Error::Error;
};

}  // namespace wkelly
