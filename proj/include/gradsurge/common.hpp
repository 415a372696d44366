#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gradsurge {

// Flat parameter / gradient storage in the canonical flattening order
// (see model.hpp for the order definition).
using FlatVec = std::vector<double>;

// Invalid configuration: bad file, bad key, incompatible shapes declared
// up front. Maps to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse: preconditions violated by the caller. Maps to exit code 2.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure at runtime: non-finite values, divergent iterations.
// Maps to exit code 4.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gradsurge
