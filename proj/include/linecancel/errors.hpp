#pragma once

#include <stdexcept>
#include <string>

namespace linecancel {

// Exit-code mapping used by the command-line tool:
//   InputError -> 2, NumericError -> 3, IllPosedError -> 4.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent user input (files, traces, scenarios).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: integration drift, non-unitary pulse, etc.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Trial geometry that does not determine a unique phasor.
class IllPosedError : public Error {
 public:
  using Error::Error;
};

/// Data that fits only with a non-physical (non-positive) scale factor.
class DegenerateDataError : public IllPosedError {
 public:
  using IllPosedError::IllPosedError;
};

}  // namespace linecancel
