#pragma once

#include <stdexcept>

namespace isoq {

/// Violated precondition of an operation (caller bug).
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

/// Level set degenerates (vanishing gradient / search direction) where a cut needs one.
struct DegenerateLevelSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mesh transformation lost invertibility: non-positive Jacobian or collapsed tangent.
struct SingularDeformation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Integrand or linear solve produced unusable values.
struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace isoq
