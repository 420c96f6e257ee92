#pragma once

#include <stdexcept>
#include <string>

namespace psfm {

// Precondition or contract violation detected at a public API boundary.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The input is well formed but numerically degenerate (collinear points,
// rank-deficient systems, disconnected graphs).
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace psfm
