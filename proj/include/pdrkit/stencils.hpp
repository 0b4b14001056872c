#pragma once

#include "pdrkit/field.hpp"

namespace pdrkit {

// All discrete derivatives in the project come from these stencils:
// central differences in the interior, second-order one-sided at the
// boundary. Exact on quadratics (gradient and hessian alike).

VectorField gradient(const ScalarField& f);

// [dxx, dxy, dyy]; the mixed entry is the symmetrized composition
// 0.5*(dx(dy f) + dy(dx f)). Needs >= 4 nodes per axis.
SymMatrixField hessian(const ScalarField& f);

// per-component gradient of a vector field: J(i,j) = d_j X_i
MatrixField jacobian(const VectorField& X);

// (X . grad) s and (X . grad) Y
ScalarField directional_derivative(const VectorField& X, const ScalarField& s);
VectorField directional_derivative(const VectorField& X, const VectorField& Y);

// Lie bracket [X, Y] = (X.grad)Y - (Y.grad)X
VectorField lie_bracket(const VectorField& X, const VectorField& Y);

// row divergence of a symmetric tensor field: (div T)_i = d_j T_ji
VectorField divergence(const SymMatrixField& T);

} // namespace pdrkit
