#pragma once

#include <stdexcept>
#include <string>

namespace tadkit {

// Error taxonomy. Each class maps to a stable "type" string used by the CLI
// when rendering machine-readable errors.

class Error : public std::runtime_error {
 public:
  Error(std::string type, const std::string& msg)
      : std::runtime_error(msg), type_(std::move(type)) {}
  const std::string& type() const { return type_; }

 private:
  std::string type_;
};

// Malformed input data: bad CSV, duplicate timestamps, unknown columns.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error("data_error", msg) {}
};

// Shape or axis mismatch in tensor operations.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error("dimension_error", msg) {}
};

// Invalid configuration: unknown operator tag, bad preset, out-of-range knob.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config_error", msg) {}
};

// API misuse: backward on non-scalar, missing gradient, missing threshold.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& msg) : Error("contract_error", msg) {}
};

// Numerical failure that has no defined fallback.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error("numeric_error", msg) {}
};

}  // namespace tadkit
