#pragma once

#include <stdexcept>

namespace tdann {

// Shape or dimensionality disagreement between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A caller broke an operation's precondition.
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite values where finite ones are required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed external file (IDX, CSV, checkpoint).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem-level failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tdann
