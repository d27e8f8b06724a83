#pragma once

#include <stdexcept>
#include <string>

namespace borrowkit {

/// Base of every exception raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

class TooFewRows : public Error {
 public:
  using Error::Error;
};

/// Effective sample size too small for a weighted residual variance.
class EssTooSmall : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// Complete or quasi-complete separation in a logistic fit, or a single label class.
class Separation : public Error {
 public:
  using Error::Error;
};

class SingularDesign : public Error {
 public:
  using Error::Error;
};

/// Matrix that should be a valid covariance (or precision) is not.
class InvalidCovariance : public Error {
 public:
  using Error::Error;
};

/// Malformed user input: CSV schema, configuration, flags.
class ValidationError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require_domain(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace detail
}  // namespace borrowkit
