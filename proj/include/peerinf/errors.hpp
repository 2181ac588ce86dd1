#pragma once

#include <stdexcept>
#include <string>

namespace peerinf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter block violates its documented invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Matrix or vector dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Unsupported or malformed configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Behavior recursion diverged past the overflow guard.
class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& what, double radius)
      : Error(what), spectral_radius_(radius) {}
  double spectral_radius() const noexcept { return spectral_radius_; }

 private:
  double spectral_radius_;
};

/// Least-squares design is rank deficient.
class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

/// k-means could not produce k non-empty clusters on any restart.
class DegenerateClusteringError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace peerinf
