#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pdrkit/invert.hpp"
#include "pdrkit/scenario.hpp"

namespace pdrkit {

// Batch pipelines behind the CLI subcommands.  Each run writes into its own
// output directory: PDF1 fields, a `metrics.txt` key = value file, and
// plain-text column tables for sweeps.  All runs are deterministic given
// (config, seed).

struct RunOptions {
    std::string out_dir;
    std::uint64_t seed = 0;
    bool force = false;              // proceed past failed hypothesis checks
    bool have_subdomain = false;     // restrict hypothesis masks
    double sub_x0 = 0, sub_y0 = 0, sub_x1 = 1, sub_y1 = 1;
    bool estimate_condition = false; // inverse-power sigma_min of the coupled matrix
};

// solves the background and perturbed problems, checks the frame hypotheses,
// writes solutions + H + dH (+ gamma_true) and manifest; returns metrics
std::map<std::string, double> run_synthesize(const Scenario& sc,
                                             const RunOptions& opt);

// loads a measurement directory, reconstructs, writes gamma_rec/trace_rec/
// spherical-deviatoric parts and metrics (errors when gamma_true is present)
std::map<std::string, double> run_reconstruct(const std::string& measure_dir,
                                              const Scenario& sc,
                                              const RunOptions& opt);

// frame hypothesis report only (no perturbation solves)
struct CheckReport {
    std::vector<HypothesisReport> hypotheses;
    double mmat_discrepancy = 0.0;
    bool pass = false;
};
CheckReport run_check(const Scenario& sc, const RunOptions& opt);

// sweep axes: "epsilon" (Frechet consistency), "resolution" (round-trip
// convergence), "noise" (error vs amplitude); writes a column table plus
// fitted slope/order metrics.  Takes the raw config because the resolution
// axis rebuilds the scenario per grid size.
struct SweepResult {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::map<std::string, double> metrics;
};
SweepResult run_sweep(const Config& cfg, const std::string& axis,
                      const std::vector<double>& values,
                      const RunOptions& opt);

// randomized symbol-identity battery; writes the plain-text report
struct SymbolsReport {
    std::vector<IdentityCheck> checks;
    bool pass = false;
};
SymbolsReport run_symbols_verify(std::uint64_t seed, int nsamples,
                                 const RunOptions& opt);

// shared helpers
void ensure_out_dir(const std::string& dir, bool force);
void write_metrics(const std::string& path,
                   const std::map<std::string, double>& metrics);

} // namespace pdrkit
