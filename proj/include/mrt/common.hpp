#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mrt {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Cross-range (d <= 2) or full (d+1 <= 3) vectors without heap allocation.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline Vec zeros(int n) { return Vec::Zero(n); }

// Error classes map onto CLI exit codes: configuration -> 2,
// numerical -> 3, non-identifiable -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ModelValidityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoDetectionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonIdentifiableError : public Error {
 public:
  using Error::Error;
};

class RangeBoundsError : public NonIdentifiableError {
 public:
  using NonIdentifiableError::NonIdentifiableError;
};

}  // namespace mrt
