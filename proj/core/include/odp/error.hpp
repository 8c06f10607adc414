#pragma once

#include <stdexcept>
#include <string>

namespace odp {

/// Invalid configuration, flags, or preconditions supplied by the caller.
/// CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or truncated input files. CLI maps this to exit code 3.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Statistics that are undefined on the given input (zero variance,
/// zero vector, single cluster). CLI maps this to exit code 4.
struct DegenerateError : std::runtime_error {
  explicit DegenerateError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace odp
