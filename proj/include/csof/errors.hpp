#pragma once

#include <stdexcept>
#include <string>

namespace csof {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-conformable or otherwise malformed matrix dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An iterative numeric routine failed (eigen-iteration, factorization).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be inverted is singular or below the invertibility threshold.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed problem or result document.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A document parsed but violates a semantic invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace csof
