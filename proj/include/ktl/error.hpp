#pragma once

#include <stdexcept>
#include <string>

namespace ktl {

// Malformed input: bad masses, dimension mismatches, out-of-range arguments.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input is well formed but outside the operation's domain (e.g. C != 2).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Statistic is undefined for the given data (zero variance, rank loss).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File ingestion failure; the message carries the location.
class IngestionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// An invariant the math guarantees did not hold numerically.
class InternalConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Training or generation could not produce a result.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ktl
