#pragma once

#include <stdexcept>
#include <string>

namespace nsslab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of a (possibly capped) function.
class DomainViolation : public Error {
 public:
  using Error::Error;
};

/// A scalar inversion target is not bracketed by the search interval.
class BracketError : public Error {
 public:
  using Error::Error;
};

/// A closed-loop matrix is not Hurwitz. Carries the spectral abscissa.
class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double spectral_abscissa)
      : Error(what), spectral_abscissa_(spectral_abscissa) {}
  double spectral_abscissa() const { return spectral_abscissa_; }

 private:
  double spectral_abscissa_;
};

class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced while evaluating an oracle.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A noise intensity exceeds the admissible scNSS cap d1.
class AdmissibilityError : public Error {
 public:
  AdmissibilityError(const std::string& what, double d1)
      : Error(what), d1_(d1) {}
  double d1() const { return d1_; }

 private:
  double d1_;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

}  // namespace nsslab
