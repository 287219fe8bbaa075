#pragma once

#include <stdexcept>
#include <string>

namespace tsxai {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or layer shapes do not chain.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A caller-supplied argument or configuration value is out of range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// File missing, unreadable, or malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

// A propagation rule met a layer it has no rule for.
class UnsupportedLayer : public Error {
 public:
  using Error::Error;
};

// A regression system could not be solved.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

// Stored artifacts do not belong to the run being checked.
class FingerprintMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace tsxai
