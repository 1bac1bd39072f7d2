#pragma once

#include <stdexcept>
#include <string>

namespace refchoice {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file; carries the 1-based row where parsing stopped.
struct ParseError : Error {
  ParseError(const std::string& file, std::size_t row, const std::string& what)
      : Error(file + ":" + std::to_string(row) + ": " + what),
        row(row) {}
  std::size_t row;
};

// Violation of a documented invariant or precondition.
struct ValidationError : Error {
  using Error::Error;
};

}  // namespace refchoice
