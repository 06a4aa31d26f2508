#pragma once

#include <stdexcept>

namespace blockboot {

// Parameter combinations that cannot be used with the given data or sample
// size (block length exceeds sample, selector window violated, ...).
// The CLI maps this to exit code 3.
class InfeasibleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration documents, unknown keys, missing required flags.
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace blockboot
