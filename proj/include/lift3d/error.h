#pragma once

#include <stdexcept>
#include <string>

namespace lift3d {

// Bad input: schema violations, broken invariants, unknown ids. Maps to
// CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem / stream failures. Maps to CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Zero or parallel halves in a 6D rotation vector.
class DegenerateRotationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Point cloud that cannot support a box (fewer than 3 points or collinear
// in the ground plane).
class DegenerateCloudError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Non-finite values encountered while evaluating a numerical function.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] void throw_validation(const std::string& what);

}  // namespace lift3d
