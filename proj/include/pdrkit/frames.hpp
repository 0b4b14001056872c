#pragma once

#include "pdrkit/measure.hpp"

namespace pdrkit {

// Frame data derived from an (n+1)-solution set. Conventions:
//   mu ratios solve  sum_i (mu_i/mu) grad u_i + grad u_{n+1} = 0  per node,
//   with mu normalized to 1 (so mu_i below means mu_i/mu);
//   Z_i = grad(mu_i), Z = [Z_1 | Z_2], Zstar = Z^{-T};
//   Mmat = sum_i mu_i H_i + H_{n+1},  H_i = A0 (hess u_i) A0,  A0 = sqrt(gamma0).
// The determinant-ratio expression for mu_i quoted in the source material is
// the negative of this convention (Cramer's rule); everything downstream uses
// the defining equation above and is consistent with it.

struct HypothesisReport {
    std::string name;
    double min_value = 0.0;   // min over evaluated nodes of the checked quantity
    double threshold = 0.0;
    double pass_fraction = 0.0;
    ScalarField mask;         // 1 where the hypothesis holds
    bool all_pass() const { return pass_fraction >= 1.0; }
};

ScalarField det_grad_basis(const SolutionSet& set); // det[grad u_1 | grad u_2]

// Hyp "uniformly nondegenerate basis": det >= c0 everywhere (checked on the
// optional region mask; null -> whole grid)
HypothesisReport check_hyp_det(const SolutionSet& set, double c0,
                               const ScalarField* region = nullptr);

// per-node 2x2 solve of the defining equation; MaskError if the basis is
// degenerate at a node inside the mask, value 0 outside the mask
VectorField compute_mu(const SolutionSet& set, const ScalarField* mask = nullptr);

MatrixField compute_Z(const VectorField& mu);

ScalarField sigma_min_Z(const MatrixField& Z);
ScalarField cond_Z(const MatrixField& Z);

// Hyp "full rank Z": smallest singular value >= threshold
HypothesisReport check_hyp_Z(const MatrixField& Z, double threshold,
                             const ScalarField* region = nullptr);

// Z^{-T}; MaskError if singular inside mask, 0 outside
MatrixField dual_frame(const MatrixField& Z, const ScalarField* mask = nullptr);

// mu-weighted Hessian sum (symmetric by construction)
SymMatrixField compute_Mmat(const SolutionSet& set, const VectorField& mu);

// pointwise Frobenius distance between Mmat and its frame expression
// -A0 Z [gradU]^T A0 (equal in the continuum; O(h^2) discretely)
ScalarField mmat_frame_discrepancy(const SolutionSet& set, const MatrixField& Z,
                                   const SymMatrixField& Mmat);

struct FrameData {
    VectorField mu;
    MatrixField Z, Zstar;
    SymMatrixField Mmat;
    HypothesisReport hyp_det, hyp_Z;
    ScalarField mmat_discrepancy;
};

FrameData compute_frames(const SolutionSet& set, double c0, double sigma_min,
                         const ScalarField* region = nullptr);

} // namespace pdrkit
