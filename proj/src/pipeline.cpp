#include "pdrkit/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pdrkit/errors.hpp"
#include "pdrkit/field_io.hpp"
#include "pdrkit/norms.hpp"
#include "pdrkit/util.hpp"

namespace fs = std::filesystem;

namespace pdrkit {

namespace {

ScalarField region_field(const Grid2D& grid, const RunOptions& opt) {
    const auto mask =
        subdomain_mask(grid, opt.sub_x0, opt.sub_y0, opt.sub_x1, opt.sub_y1);
    ScalarField f(grid);
    for (std::size_t k = 0; k < mask.size(); ++k) f[k] = mask[k];
    return f;
}

double masked_max(const ScalarField& f, const ScalarField& mask) {
    double m = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k)
        if (mask[k] > 0.5) m = std::max(m, std::abs(f[k]));
    return m;
}

void refuse_if_failed(const FrameData& frames, bool force) {
    std::string failed;
    for (const HypothesisReport* h : {&frames.hyp_det, &frames.hyp_Z})
        if (!h->all_pass())
            failed += (failed.empty() ? "" : ", ") + h->name +
                      " (pass fraction " + format_double(h->pass_fraction) +
                      ", min " + format_double(h->min_value) + ")";
    if (!failed.empty() && !force)
        throw MaskError("hypothesis check failed: " + failed +
                        "; pass --force to proceed anyway");
}

void put_frame_metrics(std::map<std::string, double>& m, const FrameData& fr) {
    m["hyp.det.min"] = fr.hyp_det.min_value;
    m["hyp.det.pass_fraction"] = fr.hyp_det.pass_fraction;
    m["hyp.Z.min"] = fr.hyp_Z.min_value;
    m["hyp.Z.pass_fraction"] = fr.hyp_Z.pass_fraction;
    m["frames.mmat_discrepancy_max"] =
        masked_max(fr.mmat_discrepancy, fr.hyp_Z.mask);
}

double dh_h1_max(const MeasurementSet& mset) {
    double m = 0.0;
    for (const auto& f : mset.dH) m = std::max(m, norm_h1(f));
    return m;
}

double dh_max_abs(const MeasurementSet& mset) {
    double m = 0.0;
    for (const auto& f : mset.dH) m = std::max(m, max_abs(f));
    return m;
}

SymMatrixField axpy_tensor(const SymMatrixField& base, double scale,
                           const SymMatrixField& delta) {
    require_same_grid(base.grid, delta.grid, "tensor sum");
    SymMatrixField out(base.grid);
    for (std::size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = base.data[k] + scale * delta.data[k];
    return out;
}

ScalarField diff_scalar(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid, b.grid, "scalar difference");
    ScalarField out(a.grid);
    for (std::size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = a.data[k] - b.data[k];
    return out;
}

SymMatrixField diff_sym(const SymMatrixField& a, const SymMatrixField& b) {
    require_same_grid(a.grid, b.grid, "tensor difference");
    SymMatrixField out(a.grid);
    for (std::size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = a.data[k] - b.data[k];
    return out;
}

ReconstructOptions reconstruct_options(const Scenario& sc,
                                       const RunOptions& opt) {
    ReconstructOptions ro;
    ro.c0 = sc.c0;
    ro.sigma_min = sc.sigma_min;
    ro.estimate_condition = opt.estimate_condition;
    return ro;
}

void write_table(const std::string& path, const std::string& axis,
                 const SweepResult& res) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write table: " + path);
    out << "# sweep axis: " << axis << "\n#";
    for (const auto& c : res.columns) out << " " << c;
    out << "\n";
    for (const auto& row : res.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "  " : "") << format_double(row[i]);
        out << "\n";
    }
    if (!out) throw IoError("failed while writing table: " + path);
}

} // namespace

void ensure_out_dir(const std::string& dir, bool force) {
    if (dir.empty()) throw IoError("no output directory given");
    fs::create_directories(dir);
    if (!force && !fs::is_empty(dir))
        throw IoError("output directory not empty: " + dir +
                      " (pass --force to overwrite)");
}

void write_metrics(const std::string& path,
                   const std::map<std::string, double>& metrics) {
    std::map<std::string, std::string> kv;
    for (const auto& [k, v] : metrics) kv[k] = format_double(v);
    write_kv_file(path, kv);
}

std::map<std::string, double> run_synthesize(const Scenario& sc,
                                             const RunOptions& opt) {
    ensure_out_dir(opt.out_dir, opt.force);
    const EllipticOperator op(sc.grid, sc.gamma0);
    const SolutionSet set = synthesize_solutions(op, sc.g);

    ScalarField region;
    const ScalarField* regp = nullptr;
    if (opt.have_subdomain) {
        region = region_field(sc.grid, opt);
        regp = &region;
    }
    const FrameData frames = compute_frames(set, sc.c0, sc.sigma_min, regp);
    refuse_if_failed(frames, opt.force);

    MeasurementSet mset = synthesize_measurements(op, set, sc.gamma);

    std::map<std::string, double> metrics;
    metrics["grid.nx"] = sc.grid.nx;
    metrics["grid.ny"] = sc.grid.ny;
    metrics["solutions.m"] = set.m();
    put_frame_metrics(metrics, frames);
    metrics["gamma.max_abs"] = max_abs(sc.gamma);
    metrics["data.dh_h1_max"] = dh_h1_max(mset);
    metrics["data.dh_max_abs"] = dh_max_abs(mset);

    double abs_amp = 0.0;
    if (sc.noise_amplitude > 0.0) {
        abs_amp = sc.noise_amplitude * metrics["data.dh_h1_max"];
        add_noise(mset, abs_amp, opt.seed);
    }
    metrics["noise.amplitude_rel"] = sc.noise_amplitude;
    metrics["noise.amplitude_abs"] = abs_amp;

    mset.provenance["source"] = "synthesize";
    save_measurements(opt.out_dir, set, mset, &sc.gamma);
    write_metrics((fs::path(opt.out_dir) / "metrics.txt").string(), metrics);
    return metrics;
}

std::map<std::string, double> run_reconstruct(const std::string& measure_dir,
                                              const Scenario& sc,
                                              const RunOptions& opt) {
    ensure_out_dir(opt.out_dir, opt.force);
    const LoadedMeasurements loaded = load_measurements(measure_dir);
    require_same_grid(loaded.set.grid, sc.grid, "reconstruct configuration");

    std::map<std::string, double> metrics;
    if (opt.have_subdomain) {
        const ScalarField region = region_field(sc.grid, opt);
        const FrameData sub =
            compute_frames(loaded.set, sc.c0, sc.sigma_min, &region);
        metrics["hyp.det.sub_pass_fraction"] = sub.hyp_det.pass_fraction;
        metrics["hyp.Z.sub_pass_fraction"] = sub.hyp_Z.pass_fraction;
        refuse_if_failed(sub, opt.force);
    }

    const InversionResult res =
        reconstruct(loaded.set, loaded.mset, reconstruct_options(sc, opt));
    refuse_if_failed(res.frames, opt.force || opt.have_subdomain);

    const fs::path out(opt.out_dir);
    write_field((out / "v1.pd1").string(), res.v[0]);
    write_field((out / "v2.pd1").string(), res.v[1]);
    write_field((out / "gamma_rec.pd1").string(), res.gamma_rec);
    write_field((out / "trace_rec.pd1").string(), res.trace_rec);
    write_field((out / "gamma_dev.pd1").string(), res.parts.dev);

    for (const auto& [k, v] : res.diagnostics) metrics[k] = v;
    if (loaded.has_gamma_true) {
        const ScalarField trace_true =
            decompose(loaded.gamma_true, loaded.set.gamma0).trace;
        metrics["err.gamma.max_abs"] =
            max_abs(diff_sym(res.gamma_rec, loaded.gamma_true));
        // relative errors only make sense against a nonzero reference
        if (max_abs(loaded.gamma_true) > 0.0) {
            metrics["err.gamma.rel_l2"] = rel_l2(res.gamma_rec, loaded.gamma_true);
            metrics["err.trace.rel_h1"] = rel_h1(res.trace_rec, trace_true);
        }
    }
    write_metrics((out / "metrics.txt").string(), metrics);
    return metrics;
}

CheckReport run_check(const Scenario& sc, const RunOptions& opt) {
    const EllipticOperator op(sc.grid, sc.gamma0);
    const SolutionSet set = synthesize_solutions(op, sc.g);

    ScalarField region;
    const ScalarField* regp = nullptr;
    if (opt.have_subdomain) {
        region = region_field(sc.grid, opt);
        regp = &region;
    }
    const FrameData frames = compute_frames(set, sc.c0, sc.sigma_min, regp);

    CheckReport rep;
    rep.hypotheses = {frames.hyp_det, frames.hyp_Z};
    rep.mmat_discrepancy = masked_max(frames.mmat_discrepancy, frames.hyp_Z.mask);
    rep.pass = frames.hyp_det.all_pass() && frames.hyp_Z.all_pass();

    if (!opt.out_dir.empty()) {
        ensure_out_dir(opt.out_dir, opt.force);
        const fs::path out(opt.out_dir);
        write_field((out / "hyp_det_mask.pd1").string(), frames.hyp_det.mask);
        write_field((out / "hyp_Z_mask.pd1").string(), frames.hyp_Z.mask);
        write_field((out / "mmat_discrepancy.pd1").string(),
                    frames.mmat_discrepancy);
        std::map<std::string, double> metrics;
        put_frame_metrics(metrics, frames);
        write_metrics((out / "metrics.txt").string(), metrics);
    }
    return rep;
}

namespace {

SweepResult sweep_epsilon(const Scenario& sc, const std::vector<double>& values) {
    if (max_abs(sc.gamma) == 0.0)
        throw ConfigError("epsilon sweep needs a nonzero perturbation");
    const EllipticOperator op(sc.grid, sc.gamma0);
    const SolutionSet set = synthesize_solutions(op, sc.g);
    const MeasurementSet mset = synthesize_measurements(op, set, sc.gamma);

    double dh_l2_sq = 0.0;
    for (const auto& f : mset.dH) dh_l2_sq += norm_l2(f) * norm_l2(f);
    const double dh_l2 = std::sqrt(dh_l2_sq);

    SweepResult res;
    res.columns = {"epsilon", "consistency_l2", "consistency_rel"};
    std::vector<double> errs;
    for (const double eps : values) {
        if (!(eps > 0.0)) throw ConfigError("epsilon values must be positive");
        const SymMatrixField geps = axpy_tensor(sc.gamma0, eps, sc.gamma);
        const EllipticOperator ope(sc.grid, geps);
        const SolutionSet sete = synthesize_solutions(ope, sc.g);
        double err_sq = 0.0;
        for (int k = 0; k < MeasurementSet::num_dH_pairs(set.m()); ++k) {
            const auto [i, j] = MeasurementSet::dH_pair(k + 1);
            const ScalarField He = power_density(sete, i, j);
            ScalarField e(sc.grid);
            const ScalarField& H0 = mset.H_at(i, j);
            const ScalarField& dH = mset.dH_at(i, j);
            for (std::size_t n = 0; n < e.size(); ++n)
                e[n] = (He[n] - H0[n]) / eps - dH[n];
            err_sq += norm_l2(e) * norm_l2(e);
        }
        const double err = std::sqrt(err_sq);
        errs.push_back(err);
        res.rows.push_back({eps, err, err / dh_l2});
    }
    res.metrics["fit.slope"] = fit_loglog_slope(values, errs);
    res.metrics["data.dh_l2"] = dh_l2;
    return res;
}

SweepResult sweep_resolution(const Config& cfg, const std::vector<double>& values,
                             const RunOptions& opt) {
    SweepResult res;
    res.columns = {"n", "h", "err_gamma_rel_l2", "err_trace_rel_h1"};
    std::vector<double> hs, egs, ets;
    for (const double value : values) {
        const int n = int(std::lround(value));
        if (n < 3) throw ConfigError("resolution values must be grid sizes >= 3");
        Config c2 = cfg;
        const std::string s = std::to_string(n);
        if (c2.has("grid.nx")) {
            c2.set("grid.nx", s);
            c2.set("grid.ny", s);
        } else {
            c2.set("grid.n", s);
        }
        const Scenario sc = build_scenario(c2);
        const EllipticOperator op(sc.grid, sc.gamma0);
        const SolutionSet set = synthesize_solutions(op, sc.g);
        MeasurementSet mset = synthesize_measurements(op, set, sc.gamma);
        if (sc.noise_amplitude > 0.0)
            add_noise(mset, sc.noise_amplitude * dh_h1_max(mset), opt.seed);
        const InversionResult rec =
            reconstruct(set, mset, reconstruct_options(sc, opt));
        const ScalarField trace_true = decompose(sc.gamma, sc.gamma0).trace;
        const double eg = rel_l2(rec.gamma_rec, sc.gamma);
        const double et = rel_h1(rec.trace_rec, trace_true);
        const double h = std::max(sc.grid.hx(), sc.grid.hy());
        hs.push_back(h);
        egs.push_back(eg);
        ets.push_back(et);
        res.rows.push_back({double(n), h, eg, et});
    }
    if (values.size() >= 2) {
        res.metrics["order.gamma"] = fit_loglog_slope(hs, egs);
        res.metrics["order.trace"] = fit_loglog_slope(hs, ets);
    }
    std::size_t finest = 0;
    for (std::size_t i = 1; i < hs.size(); ++i)
        if (hs[i] < hs[finest]) finest = i;
    res.metrics["err.gamma.rel_l2.finest"] = egs[finest];
    res.metrics["err.trace.rel_h1.finest"] = ets[finest];
    return res;
}

SweepResult sweep_noise(const Scenario& sc, const std::vector<double>& values,
                        const RunOptions& opt) {
    const EllipticOperator op(sc.grid, sc.gamma0);
    const SolutionSet set = synthesize_solutions(op, sc.g);
    const MeasurementSet mset0 = synthesize_measurements(op, set, sc.gamma);
    const double base = dh_h1_max(mset0);
    const InversionResult rec0 =
        reconstruct(set, mset0, reconstruct_options(sc, opt));
    const ScalarField trace_true = decompose(sc.gamma, sc.gamma0).trace;

    SweepResult res;
    res.columns = {"amplitude_rel", "amplitude_abs", "noise_gamma_l2",
                   "noise_trace_h1", "err_gamma_rel_l2", "err_trace_rel_h1"};
    std::vector<double> amps, ngs, nts;
    for (const double rel : values) {
        const double abs_amp = rel * base;
        MeasurementSet mset = mset0;
        add_noise(mset, abs_amp, opt.seed);
        const InversionResult rec =
            reconstruct(set, mset, reconstruct_options(sc, opt));
        const double ng = norm_l2(diff_sym(rec.gamma_rec, rec0.gamma_rec));
        const double nt = norm_h1(diff_scalar(rec.trace_rec, rec0.trace_rec));
        const double eg = rel_l2(rec.gamma_rec, sc.gamma);
        const double et = rel_h1(rec.trace_rec, trace_true);
        amps.push_back(abs_amp);
        ngs.push_back(ng);
        nts.push_back(nt);
        res.rows.push_back({rel, abs_amp, ng, nt, eg, et});
    }
    if (values.size() >= 2) {
        const LinearFit fg = fit_linear(amps, ngs);
        const LinearFit ft = fit_linear(amps, nts);
        res.metrics["fit.gamma.slope"] = fg.slope;
        res.metrics["fit.gamma.r2"] = fg.r2;
        res.metrics["fit.trace.slope"] = ft.slope;
        res.metrics["fit.trace.r2"] = ft.r2;
    }
    res.metrics["data.dh_h1_max"] = base;
    return res;
}

} // namespace

SweepResult run_sweep(const Config& cfg, const std::string& axis,
                      const std::vector<double>& values,
                      const RunOptions& opt) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    ensure_out_dir(opt.out_dir, opt.force);

    SweepResult res;
    if (axis == "epsilon") {
        res = sweep_epsilon(build_scenario(cfg), values);
    } else if (axis == "resolution") {
        res = sweep_resolution(cfg, values, opt);
    } else if (axis == "noise") {
        res = sweep_noise(build_scenario(cfg), values, opt);
    } else {
        throw ConfigError("unknown sweep axis: " + axis +
                          " (expected epsilon, resolution, or noise)");
    }

    const fs::path out(opt.out_dir);
    write_table((out / "sweep.txt").string(), axis, res);
    write_metrics((out / "metrics.txt").string(), res.metrics);
    return res;
}

SymbolsReport run_symbols_verify(std::uint64_t seed, int nsamples,
                                 const RunOptions& opt) {
    SymbolsReport rep;
    rep.checks = run_identity_battery(seed, nsamples);
    rep.pass = true;
    for (const auto& c : rep.checks) rep.pass = rep.pass && c.pass;

    if (!opt.out_dir.empty()) {
        ensure_out_dir(opt.out_dir, opt.force);
        const fs::path out(opt.out_dir);
        std::ofstream f((out / "symbols.txt").string(), std::ios::binary);
        if (!f) throw IoError("cannot write symbol report");
        std::map<std::string, double> metrics;
        for (const auto& c : rep.checks) {
            f << (c.pass ? "pass" : "FAIL") << " " << c.name
              << ": max residual " << format_double(c.max_residual)
              << " (threshold " << format_double(c.threshold) << ", "
              << c.samples << " samples)\n";
            metrics["identity." + c.name] = c.max_residual;
        }
        if (!f) throw IoError("failed while writing symbol report");
        f.close();
        write_metrics((out / "metrics.txt").string(), metrics);
    }
    return rep;
}

} // namespace pdrkit
