#pragma once

#include <stdexcept>
#include <string>

namespace gsmsim {

// Invalid dimensioning, out-of-range parameters, malformed input files.
// The CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values, diverging training, failed numeric contracts.
// The CLI maps this to exit code 2.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gsmsim
