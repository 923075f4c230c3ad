#pragma once

#include <stdexcept>
#include <string>

namespace torsionkit {

// Invalid numeric argument (nonpositive t, tol, radius, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Input lacks data an operation needs (decay rate, signs, tail bound, ...).
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A quadrature or series could not reach its error target.
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structural validation failed (group axioms, freeness, config schema, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Matrix problem too close to singular.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document; what() carries the location.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace torsionkit
