#pragma once

#include <stdexcept>
#include <string>

namespace spdcmux {

// Numerical failures: truncation too small, non-convergence, leakage budget
// exceeded. Mapped to exit code 3 by the CLI.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class TruncationError : public NumericalError {
 public:
  explicit TruncationError(const std::string& what) : NumericalError(what) {}
};

// Malformed or inconsistent configuration. Mapped to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spdcmux
