#pragma once

#include <stdexcept>
#include <string>

namespace rctlab {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// An argument lies outside the domain of the operation.
class DomainError : public Error {
  public:
    using Error::Error;
};

// Terminal voltage below OCV, so the CV current would be negative.
class NegativeCurrentError : public DomainError {
  public:
    using DomainError::DomainError;
};

// Resistance cannot be measured at zero current.
class UnmeasurableResistanceError : public DomainError {
  public:
    using DomainError::DomainError;
};

// Commanded current is not positive, so no accuracy ratio exists.
class NoCommandError : public DomainError {
  public:
    using DomainError::DomainError;
};

// The CV current would be non-positive somewhere on the remaining span.
class UnreachableTargetError : public DomainError {
  public:
    UnreachableTargetError(const std::string& what, double soc) : DomainError(what), soc_(soc) {}
    double soc() const noexcept { return soc_; }

  private:
    double soc_;
};

// Training data does not contain anything usable.
class EmptyTrainingSetError : public Error {
  public:
    using Error::Error;
};

// Malformed configuration or data file content.
class ConfigError : public Error {
  public:
    using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace rctlab
