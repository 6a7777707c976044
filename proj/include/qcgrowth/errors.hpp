#pragma once

#include <stdexcept>
#include <string>

namespace qcg {

/// Precondition violated by the caller (bad dimension, out-of-range parameter).
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Point outside the domain where a map or inverse is defined.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A map produced a degenerate value, e.g. f(Z(x)) = 0 or a vanishing boundary map.
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Finite-difference stencil crossed between branches of the transform.
struct BranchJumpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sampled Jacobian had the wrong sign beyond tolerance.
struct OrientationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A volume or curve estimate is unusable (nonpositive, non-finite).
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qcg
