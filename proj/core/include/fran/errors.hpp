#pragma once

#include <stdexcept>
#include <string>

namespace fran {

/// Base of every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration field is out of range or malformed. `field()` names it.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// An action violates a resource constraint. `constraint()` names it.
class ConstraintViolation : public Error {
 public:
  ConstraintViolation(std::string constraint, const std::string& what)
      : Error(constraint + ": " + what), constraint_(std::move(constraint)) {}
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

/// Vector or layout sizes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked in the wrong lifecycle state (step before reset, stale cache, ...).
class LifecycleError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinity surfaced during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace fran
