#pragma once

#include <stdexcept>
#include <string>

namespace gel {

// Invalid configuration: bad (M, L, n) combinations, unknown enum values,
// inconsistent model/data dimensions requested by the caller.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed external input (CSV cells, config files, design files).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or numerically impossible states encountered while
// evaluating models or solving.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Estimation could not produce a usable iterate (e.g. the inner problem
// failed at every trial point).
class EstimationError : public std::runtime_error {
 public:
  explicit EstimationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gel
