#pragma once

#include "pdrkit/field.hpp"

namespace pdrkit {

// Discrete norms use trapezoidal quadrature (weights 1 interior, 1/2 edges,
// 1/4 corners, times hx*hy). H1 = sqrt(L2^2 + |grad|_L2^2) with the module
// stencils supplying the gradient. Matrix fields use the Frobenius pointwise
// norm (off-diagonal counted twice).

double norm_l2(const ScalarField& f);
double norm_l2(const VectorField& f);
double norm_l2(const SymMatrixField& f);

double norm_h1(const ScalarField& f);
double norm_h1(const SymMatrixField& f);

double max_abs(const ScalarField& f);
double max_abs(const VectorField& f);
double max_abs(const SymMatrixField& f);

// relative errors ||a - b|| / ||b||
double rel_l2(const ScalarField& a, const ScalarField& b);
double rel_l2(const SymMatrixField& a, const SymMatrixField& b);
double rel_h1(const ScalarField& a, const ScalarField& b);

} // namespace pdrkit
