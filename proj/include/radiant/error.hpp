#pragma once

#include <stdexcept>
#include <string>

namespace radiant {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Adaptive refinement ran out of budget before the requested tolerance was certified.
class ToleranceNotMet : public Error {
 public:
  ToleranceNotMet(const std::string& what, double achieved)
      : Error(what + " (achieved " + std::to_string(achieved) + ")"), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// A sampled field does not cover the region an operator needs to read.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity showed up where finite values are required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Picard residuals kept growing.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Discrete energy growth in a linear test window (time step too large).
class InstabilityError : public Error {
 public:
  using Error::Error;
};

/// The ODE solution stayed bounded up to the configured horizon.
class NoBlowupError : public Error {
 public:
  using Error::Error;
};

/// Eigenvalue moved too much under mesh doubling.
class MeshTooCoarse : public Error {
 public:
  using Error::Error;
};

/// Input violates a stated hypothesis (e.g. eigenpair computed for another potential).
class HypothesisError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration; carries the offending key.
class ValidationError : public Error {
 public:
  ValidationError(std::string key, const std::string& why)
      : Error("invalid value for key \"" + key + "\": " + why), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace radiant
