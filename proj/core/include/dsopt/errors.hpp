#pragma once

#include <stdexcept>
#include <string>

namespace dsopt {

// Malformed or missing input data (CSV cells, schema roles, misaligned traces).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values, divergence, failed numeric checks.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad run configuration (unknown keys, out-of-range settings).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dsopt
