#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace direlieff {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or violated preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// An aggregate result would exceed the configured driver result cap.
class CapacityError : public Error {
 public:
  CapacityError(std::size_t bytes, std::size_t limit)
      : Error("aggregate result of " + std::to_string(bytes) +
              " bytes exceeds max_result_bytes=" + std::to_string(limit)),
        bytes_(bytes),
        limit_(limit) {}

  std::size_t bytes() const noexcept { return bytes_; }
  std::size_t limit() const noexcept { return limit_; }

 private:
  std::size_t bytes_;
  std::size_t limit_;
};

}  // namespace direlieff
