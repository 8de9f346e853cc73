#pragma once

#include <stdexcept>
#include <string>

namespace horam {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class DuplicateKey : public Error {
 public:
  using Error::Error;
};

class CapacityExceeded : public Error {
 public:
  using Error::Error;
};

class TallCacheViolation : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

class ReducerStateViolation : public Error {
 public:
  using Error::Error;
};

class CeilingViolation : public Error {
 public:
  using Error::Error;
};

/// The cuckoo graph needs more stash slots than are available, or the round
/// budget ran out before every component settled. Callers reseed and retry.
class InfeasibleStash : public Error {
 public:
  using Error::Error;
};

class BuildFailure : public Error {
 public:
  using Error::Error;
};

class KeyOutOfRange : public Error {
 public:
  using Error::Error;
};

/// An item that must exist in the hierarchy was not found.
class InternalNotFound : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

}  // namespace horam
