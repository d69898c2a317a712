#pragma once

#include <stdexcept>
#include <string>

namespace hashinv {

// Base for everything thrown by this library. Subtypes exist so the CLI can
// map failure classes to distinct exit codes.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mismatched vector/matrix shapes.
struct dimension_error : error {
  using error::error;
};

// Invalid configuration values (bad schedule bounds, K < 1, ...).
struct config_error : error {
  using error::error;
};

// Invalid runtime arguments (out-of-range t, label out of range, ...).
struct input_error : error {
  using error::error;
};

// Malformed text input; messages carry a 1-based line number where known.
struct parse_error : error {
  using error::error;
};

// Filesystem failures.
struct io_error : error {
  using error::error;
};

// Operation not valid in the current object state (e.g. missing checkpoint).
struct state_error : error {
  using error::error;
};

// Broken internal invariant — a bug, not a user mistake.
struct internal_error : error {
  using error::error;
};

}  // namespace hashinv
