#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pdrkit/field.hpp"

namespace pdrkit {

// Pointwise symbol calculus for the linearized measurement map, verified by
// randomized sampling in (x, xi).  Everything here is plain matrix algebra at
// a single point; no grids are involved.  Complex arithmetic stays inside
// this module (the subprincipal symbols are purely imaginary).

using Cplx = std::complex<double>;
using Mat2c = Eigen::Matrix2cd;

// a ⊙ b = (a b^T + b a^T)/2
Mat2 sym_outer(const Vec2& a, const Vec2& b);

// background tensor and its spatial derivatives frozen at one point
struct PointBackground {
    Mat2 gamma0 = Mat2::Identity();
    std::array<Mat2, 2> dgamma0{Mat2::Zero(), Mat2::Zero()};
};

// analytic background field: value and first-derivative callbacks
struct TensorFunction {
    std::function<Mat2(const Vec2&)> value;
    std::function<Mat2(const Vec2&, int)> deriv; // d(value)/dx_k
    PointBackground at(const Vec2& x) const;
};

// degree-0 symbol of the linearized measurement for one solution pair:
//   M_ij|0 = A0^-1 (V_i ⊙ V_j - (xh0.V_i) xh0 ⊙ V_j - (xh0.V_j) xh0 ⊙ V_i) A0^-1
// with V_i = A0 grad u_i, xh0 = A0 xi / |A0 xi|.  Real symmetric, degree 0.
Mat2 symbol_M0(const Mat2& gamma0, const Vec2& xi, const Vec2& gu_i,
               const Vec2& gu_j);

// nullspace of S_2 -> R^3, P -> (M_ij|0 : P) over the pairs i <= j of the
// basis gradients.  The expected nullspace is span{gamma0 xi ⊙ eta}, eta
// perpendicular to xi.
struct NullspaceReport {
    int dimension = 0;
    double angle = 0.0; // subspace angle to the expected direction
    double smin = 0.0;
    double smax = 0.0;
};
NullspaceReport nullspace_M0(const Mat2& gamma0,
                             const std::vector<Vec2>& gradu, const Vec2& xi);

// scalar parametrix symbols of the background operator -div(gamma0 grad .):
//   q_{-2} = 1/(xi.gamma0 xi),  q_{-3} purely imaginary (degree -3)
double symbol_q2(const Mat2& gamma0, const Vec2& xi);
Cplx symbol_q3(const PointBackground& bg, const Vec2& xi);

// G = |xi0|^2 (i q_{-3} xi0 + A0 grad_x q_{-2}); real since q_{-3} is
// imaginary
Vec2 vector_G(const PointBackground& bg, const Vec2& xi);

// degree -1 symbol of the linearized measurement; purely imaginary entries
Mat2c symbol_Mm1(const PointBackground& bg, const Vec2& xi, const Vec2& gu_i,
                 const Mat2& hess_i, const Vec2& gu_j, const Mat2& hess_j);

// orthonormal frame {xh0, xh1}, xh0 = normalized A0 xi, xh1 = Rot(pi/2) xh0;
// homogeneous of degree zero in xi
std::array<Vec2, 2> frame_xi(const Mat2& gamma0, const Vec2& xi);

// frame-component symbol A0^-1 xh_p ⊙ xh_q A0^-1
Mat2 symbol_T(const Mat2& gamma0, const Vec2& xihat_p, const Vec2& xihat_q);

// pointwise weights solving sum_i mu_i grad u_i + grad u_3 = 0, and the
// weighted Hessian sum MM = sum_i mu_i hess_i + hess_3 conjugated by A0:
// point_Mmat returns A0 (sum mu_i hess u_i + hess u_3) A0
Vec2 point_mu(const std::array<Vec2, 3>& gradu);
Mat2 point_Mmat(const Mat2& gamma0, const std::array<Vec2, 3>& gradu,
                const std::array<Mat2, 3>& hess);

// one entry of the randomized identity report
struct IdentityCheck {
    std::string name;
    int samples = 0;
    double max_residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

// run every algebraic identity over nsamples random draws (SPD backgrounds
// A^T A + 0.1 I, unit-sphere frequencies, conditioning-bounded bases)
std::vector<IdentityCheck> run_identity_battery(std::uint64_t seed,
                                                int nsamples);

// residual of the truncated parametrix composition sigma(Q L0) - 1 at one
// point; decays like |xi|^-2 for smooth backgrounds
Cplx composition_residual(const TensorFunction& bg, const Vec2& x,
                          const Vec2& xi);

} // namespace pdrkit
