#pragma once

#include <stdexcept>
#include <string>

namespace optlist {

// Bad flags, unknown enum values, malformed spec files. CLI exit code 2.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// An input config failed schema validation. CLI exit code 3.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A store is missing records needed by the requested analysis. CLI exit code 4.
class IncompleteStoreError : public std::runtime_error {
 public:
  explicit IncompleteStoreError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Vector/matrix dimension mismatch.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Normalization constants collapsed (init == best); the task should have
// been rejected upstream.
class DegenerateTaskError : public std::runtime_error {
 public:
  explicit DegenerateTaskError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Duplicate (task, optimizer, seed) key on append.
class StoreConflictError : public std::runtime_error {
 public:
  explicit StoreConflictError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Record evaluated under a different RunProfile than the store holds.
class IncompatibleProfileError : public std::runtime_error {
 public:
  explicit IncompatibleProfileError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// The finite-difference oracle hit a non-finite probe point.
class OracleError : public std::runtime_error {
 public:
  explicit OracleError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace optlist
