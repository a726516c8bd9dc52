#pragma once

#include <stdexcept>
#include <string>

namespace edgetsn {

// Base of every error the library raises. Categories map onto CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor dimensions disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// An object was used in the wrong lifecycle state (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

// A clip has fewer frames than the requested number of segments.
class InsufficientFramesError : public Error {
 public:
  using Error::Error;
};

// Input data could not be read or decoded.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace edgetsn
