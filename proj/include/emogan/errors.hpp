#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace emogan {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not chain.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition (stale cache, bad one-hot row, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Non-finite or exploding values during training.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::ptrdiff_t layer = -1)
      : Error(what), layer_(layer) {}
  std::ptrdiff_t layer() const noexcept { return layer_; }

 private:
  std::ptrdiff_t layer_;
};

// Input data cannot support the requested computation (single class, too few rows).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

// Malformed input file.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row = 0) : Error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class NumericalDomainError : public Error {
 public:
  using Error::Error;
};

// Operation not available for this model kind (e.g. data discriminator on M1).
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace emogan
