#pragma once

#include <stdexcept>
#include <string>

namespace ttm {

// Base class for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (bad size, out-of-range id, ...).
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// The simulation reached a point where incomplete activities exist but none
// is running and none can claim its resources.
class DeadlockError : public Error {
 public:
  using Error::Error;
};

// Some hidden state has no outgoing transition evidence in the training
// ensemble. The caller should enlarge the ensemble.
class UnderSampledError : public Error {
 public:
  using Error::Error;
};

// Decoding produced no viable path, so nothing can be inferred.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ttm
