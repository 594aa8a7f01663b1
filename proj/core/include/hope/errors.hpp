#pragma once

#include <stdexcept>
#include <string>

namespace hope {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Shape or size disagreement between operands.
class DimensionError : public Error {
public:
  using Error::Error;
};

// Non-finite values, divergence, failed numeric checks.
class NumericError : public Error {
public:
  using Error::Error;
};

// Training produced a non-finite loss. Parameters have been restored to the
// last finite state before this is thrown.
class DivergenceError : public NumericError {
public:
  using NumericError::NumericError;
};

// Caller misuse: bad configuration, missing gradients, invalid arguments.
class UsageError : public Error {
public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

// Malformed or mismatched files and records.
class DataError : public Error {
public:
  using Error::Error;
};

// Degenerate point sets (rank deficient, too few points).
class GeometryError : public Error {
public:
  using Error::Error;
};

} // namespace hope
