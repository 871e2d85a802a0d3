#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crowdevac {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class InvalidConfig : public Error {
 public:
  explicit InvalidConfig(const std::string& message) : Error("invalid-config", message) {}
};

class EstimationError : public Error {
 public:
  explicit EstimationError(const std::string& message) : Error("estimation", message) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& message) : Error("dimension-mismatch", message) {}
};

class ControlError : public Error {
 public:
  explicit ControlError(const std::string& message) : Error("control", message) {}
};

class SimulationDiverged : public Error {
 public:
  SimulationDiverged(std::size_t iteration, const std::string& what)
      : Error("simulation-diverged",
              "non-finite " + what + " at iteration " + std::to_string(iteration)),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string key, const std::string& message)
      : Error("parse", "line " + std::to_string(line) + (key.empty() ? "" : " key '" + key + "'") +
                           ": " + message),
        line_(line),
        key_(std::move(key)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::size_t line_;
  std::string key_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

}  // namespace crowdevac
