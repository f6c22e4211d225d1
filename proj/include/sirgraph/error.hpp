#pragma once

#include <stdexcept>
#include <string>

namespace sirgraph {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input data: malformed files, violated invariants, bad parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a usable result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace sirgraph
