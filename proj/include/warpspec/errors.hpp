#pragma once

#include <stdexcept>
#include <string>

namespace warpspec {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidProfile : public Error {
  using Error::Error;
};

class ResolutionError : public Error {
  using Error::Error;
};

class ShapeError : public Error {
  using Error::Error;
};

/// Raised when a Riccati comparison solution leaves the admissible range.
class ComparisonFailure : public Error {
 public:
  ComparisonFailure(const std::string& what, double radius)
      : Error(what), radius_(radius) {}
  double radius() const { return radius_; }

 private:
  double radius_;
};

class IntegrationError : public Error {
  using Error::Error;
};

/// The channel has a singular origin; start with a Frobenius expansion.
class SingularOrigin : public IntegrationError {
  using IntegrationError::IntegrationError;
};

class NonOscillatory : public Error {
  using Error::Error;
};

class InsufficientData : public Error {
  using Error::Error;
};

/// The tail of the potential could not be certified (no oscillation fit).
class DetectorRefused : public Error {
  using Error::Error;
};

class NoDecayingSolution : public Error {
  using Error::Error;
};

class CouplingTooWeak : public Error {
 public:
  CouplingTooWeak(const std::string& what, double threshold)
      : Error(what), threshold_(threshold) {}
  double threshold() const { return threshold_; }

 private:
  double threshold_;
};

class ConnectorFailure : public Error {
  using Error::Error;
};

class OutsideRegime : public Error {
  using Error::Error;
};

class HypothesisViolated : public Error {
  using Error::Error;
};

class ConfigError : public Error {
  using Error::Error;
};

class IoError : public Error {
  using Error::Error;
};

}  // namespace warpspec
