#pragma once

#include <stdexcept>
#include <string>

namespace uvesc {

// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs violate a documented precondition (shape, sign, definiteness).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or singular factorizations.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// The SDP backend broke down before reaching a verdict.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

// The SDP backend reported that no strictly feasible point exists.
class Infeasible : public Error {
 public:
  using Error::Error;
};

// The backend returned an assignment that the independent verifier rejects.
class ToleranceViolation : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent configuration and input files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace uvesc
