#pragma once

#include <stdexcept>
#include <string>

namespace psido {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A coefficient beyond the stored truncation depth was requested.
class TruncationError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NotEllipticError : public Error {
 public:
  using Error::Error;
};

/// Raised when an exact polynomial result does not exist (e.g. 1/a0 for
/// non-constant a0); callers should switch to the sampled backend.
class NotPolynomialError : public Error {
 public:
  using Error::Error;
};

class NotSymplecticError : public Error {
 public:
  using Error::Error;
};

class ConventionError : public Error {
 public:
  using Error::Error;
};

class BlowUpError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

class PartitionError : public Error {
 public:
  using Error::Error;
};

class InconclusiveError : public Error {
 public:
  using Error::Error;
};

class InconsistentOracleError : public Error {
 public:
  using Error::Error;
};

class KappaMismatchError : public Error {
 public:
  using Error::Error;
};

class NotADerivationError : public Error {
 public:
  using Error::Error;
};

class RegionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Wraps a failure inside the decomposition driver with the stage it came from.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace psido
