#pragma once

#include <stdexcept>
#include <string>

namespace bdmec {

// Raised when a config file or config value violates its contract.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a solver's constraint set is provably empty. The message names
// the stage and the binding constraint.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bdmec
