#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dsaf {

using HypervisorId = std::size_t;
using LinkId = std::size_t;
using NodeIndex = std::size_t;
using RequestId = std::uint64_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class StoreError : public Error {
 public:
  using Error::Error;
};

class OrchestratorError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Fixed-point resource amount, stored as millionths of the display unit
/// (GHz, GB or Mbps). Counters built from Amounts are exact under any
/// sequence of additions and subtractions.
class Amount {
 public:
  static constexpr std::int64_t kScale = 1'000'000;

  constexpr Amount() = default;

  static constexpr Amount from_micros(std::int64_t micros) { return Amount(micros); }
  static Amount from_units(double units);

  constexpr std::int64_t micros() const { return micros_; }
  constexpr double units() const { return static_cast<double>(micros_) / kScale; }

  constexpr Amount& operator+=(Amount o) {
    micros_ += o.micros_;
    return *this;
  }
  constexpr Amount& operator-=(Amount o) {
    micros_ -= o.micros_;
    return *this;
  }
  friend constexpr Amount operator+(Amount a, Amount b) { return a += b; }
  friend constexpr Amount operator-(Amount a, Amount b) { return a -= b; }
  friend constexpr auto operator<=>(Amount, Amount) = default;

 private:
  constexpr explicit Amount(std::int64_t micros) : micros_(micros) {}
  std::int64_t micros_ = 0;
};

/// Ratio used for utilization; returns 0 for a zero-capacity resource.
inline double ratio(Amount used, Amount capacity) {
  return capacity.micros() == 0 ? 0.0
                                : static_cast<double>(used.micros()) /
                                      static_cast<double>(capacity.micros());
}

/// Absolute slack for delay comparisons (ms).
inline constexpr double kDelayEpsilonMs = 1e-9;

}  // namespace dsaf
