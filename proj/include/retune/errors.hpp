#pragma once

#include <stdexcept>
#include <string>

namespace retune {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric input outside an operation's domain (non-finite, non-positive, out of range).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// exp() of a log-ratio would overflow a double.
class OverflowError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Structurally invalid input: unsorted series, mismatched shapes, duplicate ids.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace retune
