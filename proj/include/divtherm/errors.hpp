#pragma once

#include <stdexcept>
#include <string>

namespace divtherm {

/// Malformed or out-of-contract configuration. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read or written. CLI exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A fit could not produce an estimate. CLI exit code 3.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few points or too little oscillation to constrain the model.
class InsufficientDataError : public FitError {
 public:
  using FitError::FitError;
};

/// Fewer spectral dips than the model needs.
class ResolutionError : public FitError {
 public:
  using FitError::FitError;
};

/// p0 == p1: no spin contrast, so no temperature information.
class ZeroContrastError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace divtherm
