#pragma once

#include <stdexcept>
#include <string>

namespace ordhmm {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed values: bad probability vectors, wrong sizes, data that does not
// match the emission family.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Stationary law requested for a chain that is not irreducible and aperiodic.
class NotErgodic : public Error {
 public:
  using Error::Error;
};

// Strict positivity of the transition matrix is required but does not hold.
class ConditionViolated : public Error {
 public:
  using Error::Error;
};

class IncompleteRecord : public Error {
 public:
  using Error::Error;
};

class InconsistentPrefix : public Error {
 public:
  using Error::Error;
};

class InvalidPath : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

// Bad command-line or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ordhmm
