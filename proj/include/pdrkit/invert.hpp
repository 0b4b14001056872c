#pragma once

#include <array>

#include "pdrkit/frames.hpp"

namespace pdrkit {

// Explicit inversion of the linearized power-density problem: from (H, dH)
// and the background solution set, recover the basis perturbations v_1, v_2
// through a coupled second-order system, then gamma pointwise.

// pointwise elimination:
//   gamma = gamma0 ([gU] H^-1 dH H^-1 [gU]^T - [gV] H^-1 [gU]^T
//                   - [gU] H^-1 [gV]^T) gamma0
// with [gU] = [grad u_1 | grad u_2], [gV] = [grad v_1 | grad v_2] and H, dH
// the 2x2 basis blocks of the measurements
SymMatrixField gamma_from_v(const SolutionSet& set, const MeasurementSet& mset,
                            const std::vector<ScalarField>& v);

// trace identity: tr(gamma0^-1 gamma) = tr(H^-1 dH) - 2 tr([gV][gU]^-1)
ScalarField trace_from_v(const SolutionSet& set, const MeasurementSet& mset,
                         const std::vector<ScalarField>& v);

// data-side source terms:
//   Y_q = grad(H^{pq} (dH_{3,p} + mu_i dH_{ip}))
//   omega = sum_q Y_q^flat wedge du_q   (2D 2-form, stored as the scalar
//           coefficient a_x b_y - a_y b_x)
//   f = sum_q (H^{pq} dH_{ip} Z_i - Y_q) . gamma0 grad u_q
struct SourceData {
    std::array<VectorField, 2> Y;
    ScalarField omega;
    ScalarField f;
};
SourceData build_Y_omega_f(const SolutionSet& set, const MeasurementSet& mset,
                           const FrameData& frames);

// coupled-system coefficients:
//   W_ij = (div gamma0 - (gamma0 Z_p . grad) Zstar_p) delta_ij
//          - [Zstar_i, gamma0 Z_j]
//   f_i  = -Zstar_i . grad f + (gamma0 Z_p . grad) omega(Zstar_p, Zstar_i)
struct CoupledCoeffs {
    std::array<std::array<VectorField, 2>, 2> W;
    std::array<ScalarField, 2> fi;
    double W_max = 0.0; // max node norm over all blocks (boundedness report)
};
CoupledCoeffs build_W_f(const FrameData& frames, const SourceData& src,
                        const SymMatrixField& gamma0);

// monolithic sparse solve of the two-block system
//   -div(gamma0 grad v_i) + W_ij . grad v_j = f_i,   v_i = 0 on the boundary
struct CoupledResult {
    std::vector<ScalarField> v;
    double residual = 0.0;       // relative algebraic residual
    double smin_estimate = -1.0; // inverse-power estimate, -1 if not requested
};
CoupledResult solve_coupled(const EllipticOperator& op,
                            const CoupledCoeffs& coeffs,
                            bool estimate_condition = false);

// residual of the linearized gradient equation for tr(gamma0^-1 gamma),
// evaluated on a reconstruction (diagnostic; decays with h on oracle data)
double trace_gradient_residual(const SolutionSet& set,
                               const MeasurementSet& mset,
                               const std::vector<ScalarField>& v,
                               const SymMatrixField& gamma_rec,
                               const ScalarField& trace_rec);

struct ReconstructOptions {
    double c0 = 1e-6;        // basis-determinant threshold
    double sigma_min = 1e-6; // Z singular-value threshold
    bool estimate_condition = false;
    bool with_diagnostics = true;
};

struct InversionResult {
    std::vector<ScalarField> v;
    SymMatrixField gamma_rec;
    ScalarField trace_rec;
    Decomposition parts; // spherical/deviatoric split of gamma_rec
    FrameData frames;
    std::map<std::string, double> diagnostics;
};

InversionResult reconstruct(const SolutionSet& set, const MeasurementSet& mset,
                            const ReconstructOptions& opt = {});

} // namespace pdrkit
