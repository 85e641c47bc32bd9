#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dualray {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix dimensions do not match the operator.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input violates an operation's precondition (empty data, off-boundary point, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Enumeration or grid budget exceeded.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Invalid run or rule configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver did not reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// Malformed input file; row and column are 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what), row_(row), column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

}  // namespace dualray
