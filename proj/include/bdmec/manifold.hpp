#pragma once

#include <cstddef>

#include "bdmec/channel.hpp"
#include "bdmec/phase_shift.hpp"

namespace bdmec {

// Inner-loop state of the block-unitary descent.
struct ManifoldState {
  PhaseShift phi;
  double kappa = 1.0;     // current step-size control
  std::size_t iter = 0;
};

// Projects a Euclidean gradient onto the tangent space at u, translated to
// the identity: Xi = grad u^H - u grad^H. Always skew-Hermitian.
CMatrix riemannian_gradient(const CMatrix& grad_euclid, const CMatrix& u);

// Third-order expansion of expm(-kappa * xi).
CMatrix taylor_rotation(const CMatrix& xi, double kappa);

// Nearest unitary matrix (polar factor).
CMatrix polar_project(const CMatrix& a);

// Applies the truncated rotation to u and re-orthonormalizes the result so
// the unitary defect stays below 1e-8 regardless of step size.
CMatrix rotate(const CMatrix& u, const CMatrix& xi, double kappa);

}  // namespace bdmec
