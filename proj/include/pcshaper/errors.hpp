/**
 * @file errors.hpp
 * @brief Exception types shared across the library.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace pcshaper {

/// Argument outside the mathematical domain of an operation (e.g. |zeta| > 1).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inconsistent or invalid configuration (basis mismatch, bad schedule, ...).
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The adaptive integrator could not continue; carries the time it stalled at.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double failure_time)
      : std::runtime_error(what + " (t = " + std::to_string(failure_time) + ")"),
        failure_time_(failure_time) {}

  [[nodiscard]] double failure_time() const noexcept { return failure_time_; }

 private:
  double failure_time_;
};

}  // namespace pcshaper
