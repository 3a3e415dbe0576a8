#pragma once

#include <stdexcept>
#include <string>

namespace cartan {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed expression text. `pos` is a 0-based offset into the input.
struct ParseError : Error {
  std::size_t pos;
  ParseError(const std::string& msg, std::size_t p)
      : Error(msg + " (at position " + std::to_string(p) + ")"), pos(p) {}
};

/// Evaluation at a point failed (vanishing denominator, excluded locus).
struct EvalError : Error {
  using Error::Error;
};

/// Shape or chart mismatch between operands.
struct DimensionError : Error {
  using Error::Error;
};

/// Invalid input document (missing field, bad type, unknown variable).
struct SchemaError : Error {
  using Error::Error;
};

}  // namespace cartan
