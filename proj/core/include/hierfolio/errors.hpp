#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hierfolio {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file layout does not match the expected column set.
class SchemaError : public Error {
 public:
  SchemaError(std::string column, const std::string& what)
      : Error(what), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

// A cell could not be parsed; `row` is the 1-based data row (header excluded).
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what) : Error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// A value violates a documented precondition or invariant.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace hierfolio
