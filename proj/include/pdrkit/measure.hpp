#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pdrkit/elliptic.hpp"
#include "pdrkit/field.hpp"
#include "pdrkit/util.hpp"

namespace pdrkit {

// n = 2 space dimensions throughout; a solution set carries m = n or n+1
// background solutions together with their stencil derivatives (the single
// source of truth for every gradient/Hessian downstream).
constexpr int kDim = 2;

struct Solution {
    ScalarField u;
    VectorField grad;
    SymMatrixField hess;
};

struct SolutionSet {
    Grid2D grid;
    SymMatrixField gamma0;
    std::vector<Solution> sols;
    int m() const { return int(sols.size()); }
};

// solves the background problems for the given Dirichlet data and attaches
// derivatives; the operator's tensor is usually gamma0 but any SPD tensor
// works (used for the nonlinear re-solve in consistency studies)
SolutionSet synthesize_solutions(const EllipticOperator& op,
                                 const std::vector<ScalarField>& g);

// H_ij = grad u_i . gamma0 grad u_j
ScalarField power_density(const SolutionSet& set, int i, int j);

// dH_ij = grad u_i . gamma grad u_j + grad u_i . gamma0 grad v_j
//                                   + grad u_j . gamma0 grad v_i
// with v_k the zero-Dirichlet perturbation solutions (one per set member)
ScalarField linearized_power_density(const SolutionSet& set, const SymMatrixField& gamma,
                                     const std::vector<ScalarField>& v, int i, int j);

struct NoiseInfo {
    double amplitude = 0.0;
    std::uint64_t seed = 0;
};

// measured data: all power densities H_ij (1 <= i <= j <= m) and the
// linearized collection dH_ij (1 <= i <= n, i <= j <= n+1)
struct MeasurementSet {
    Grid2D grid;
    int m = 0;
    std::vector<ScalarField> H;
    std::vector<ScalarField> dH;
    NoiseInfo noise;
    std::map<std::string, std::string> provenance;

    const ScalarField& H_at(int i, int j) const;  // 1-based, order-free
    const ScalarField& dH_at(int i, int j) const; // 1-based, order-free
    static int num_dH_pairs(int m);
    static std::pair<int, int> dH_pair(int k); // k-th stored pair, 1-based
};

// runs the perturbation solves and assembles H and dH
MeasurementSet synthesize_measurements(const EllipticOperator& op, const SolutionSet& set,
                                       const SymMatrixField& gamma);

// adds an independent smooth perturbation to every dH component: white noise
// on tensor cosine modes up to a quarter of the Nyquist index, rescaled so
// each component's discrete H1 norm equals `amplitude`; deterministic in seed
void add_noise(MeasurementSet& mset, double amplitude, std::uint64_t seed);
ScalarField make_noise_field(const Grid2D& grid, double amplitude, Rng& rng);

// measurement directory: PDF1 fields plus a plain-text manifest
void save_measurements(const std::string& dir, const SolutionSet& set,
                       const MeasurementSet& mset,
                       const SymMatrixField* gamma_true = nullptr);
struct LoadedMeasurements {
    SolutionSet set;
    MeasurementSet mset;
    bool has_gamma_true = false;
    SymMatrixField gamma_true;
};
LoadedMeasurements load_measurements(const std::string& dir);

} // namespace pdrkit
