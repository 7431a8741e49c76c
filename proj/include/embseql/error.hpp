#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace embseql {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. `line` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that cannot be used: unknown symbols, degenerate labels,
// missing concepts and the like.
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace embseql
