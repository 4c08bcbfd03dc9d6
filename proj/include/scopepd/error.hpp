#pragma once

#include <stdexcept>
#include <string>

namespace scopepd {

// Base for every error raised by the toolkit. Callers that only need a
// message can catch this; the subclasses let tests and the CLI tell apart
// bad input from bad configuration from numerical trouble.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data violates a documented precondition (out-of-range response,
// mismatched lengths, too few samples for a split).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Instrument, grid or run configuration is inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A solver produced non-finite values or diverged.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A serialized or fitted model breaks a structural invariant (e.g. a node
// with zero cover).
class ModelIntegrityError : public Error {
 public:
  using Error::Error;
};

// An operation would produce an empty matrix.
class EmptyResultError : public Error {
 public:
  using Error::Error;
};

// A metric is mathematically undefined for the given labels.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// A required upstream artifact (file) is missing.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace scopepd
