#pragma once

#include <stdexcept>
#include <string>

namespace lumen {

// Invalid parameters or config values. Carries the offending field path
// (e.g. "robot.bend_step") so the CLI can report it and exit with code 2.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, std::string message)
      : std::runtime_error(field + ": " + message),
        field_(std::move(field)),
        message_(std::move(message)) {}

  const std::string& field() const { return field_; }
  const std::string& message() const { return message_; }

 private:
  std::string field_;
  std::string message_;
};

// A sampling interval that admits no invariant-satisfying value.
class InfeasibleRange : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Filesystem-level failures (missing file, unwritable path). CLI exit code 1.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or version-mismatched input files. CLI exit code 1.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lumen
