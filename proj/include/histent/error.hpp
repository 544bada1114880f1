#pragma once

#include <stdexcept>
#include <string>

namespace histent {

// Base for everything the library throws on bad input or failed numerics.
struct Error : public std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed configuration or arguments; carries the offending key path when known.
struct ConfigError : public Error {
  ConfigError(const std::string& msg, std::string key_path = {})
      : Error(key_path.empty() ? msg : key_path + ": " + msg), key(std::move(key_path)) {}
  std::string key;
};

// An exact computation would exceed the configured class cap.
struct CapacityError : public Error {
  explicit CapacityError(const std::string& msg) : Error(msg) {}
};

struct ConvergenceError : public Error {
  ConvergenceError(const std::string& msg, double residual, int iters)
      : Error(msg), best_residual(residual), iterations(iters) {}
  double best_residual;
  int iterations;
};

// A checked mathematical invariant failed at runtime.
struct InvariantViolation : public Error {
  explicit InvariantViolation(const std::string& msg) : Error(msg) {}
};

}  // namespace histent
