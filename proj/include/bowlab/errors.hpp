#pragma once

#include <stdexcept>
#include <string>

namespace bowlab {

// Exit-code mapping for the CLI: usage=1, data=2, numeric=3.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& m) : std::runtime_error(m) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& m) : std::runtime_error(m) {}
};

struct ConfigError : DataError {
  explicit ConfigError(const std::string& m) : DataError(m) {}
};

struct ShapeError : DataError {
  explicit ShapeError(const std::string& m) : DataError(m) {}
};

// NaN/Inf detected where finite values are required.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace bowlab
