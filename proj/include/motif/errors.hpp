// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace motif {

/// Operand shapes do not line up.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A symbol lies outside the model alphabet.
struct DomainError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// An API was called out of order (e.g. an optimizer step without gradients).
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Inconsistent or unsupported configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. Carries the 1-based line number when known.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line_no)
      : std::runtime_error(line_no ? "line " + std::to_string(line_no) + ": " + what : what),
        line(line_no) {}
  std::size_t line = 0;
};

/// Training produced a non-finite loss or gradient.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace motif
