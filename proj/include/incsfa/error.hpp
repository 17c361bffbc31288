#pragma once

#include <stdexcept>
#include <string>

namespace incsfa {

/// Malformed or out-of-contract input data (bad frame, dimension mismatch).
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Inconsistent configuration (dims, schedules, hierarchy layout).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Corrupt, truncated or incompatible serialized model.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace incsfa
