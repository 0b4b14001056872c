// Batch driver for the power-density reconstruction toolkit.  Every
// subcommand is deterministic given (config, seed); exit code 0 means all
// requested checks passed, 1 means a check failed, 2 means an error.

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pdrkit/errors.hpp"
#include "pdrkit/pipeline.hpp"
#include "pdrkit/util.hpp"

namespace {

struct Args {
    std::string config;
    std::string out;
    std::string measure_dir;
    std::string subdomain;
    std::string axis;
    std::string values;
    std::uint64_t seed = 0;
    int samples = 1000;
    bool force = false;
    bool estimate_condition = false;
};

void add_common(CLI::App* cmd, Args& a, bool need_config, bool need_out) {
    auto* c = cmd->add_option("--config", a.config, "scenario config file");
    if (need_config) c->required();
    auto* o = cmd->add_option("--out", a.out, "output directory");
    if (need_out) o->required();
    cmd->add_option("--seed", a.seed, "random seed");
    cmd->add_flag("--force", a.force,
                  "overwrite outputs and proceed past failed hypothesis checks");
    cmd->add_option("--subdomain", a.subdomain,
                    "restrict hypothesis masks to the box x0,y0,x1,y1");
}

pdrkit::RunOptions make_options(const Args& a) {
    pdrkit::RunOptions opt;
    opt.out_dir = a.out;
    opt.seed = a.seed;
    opt.force = a.force;
    opt.estimate_condition = a.estimate_condition;
    if (!a.subdomain.empty()) {
        double x0, y0, x1, y1;
        if (std::sscanf(a.subdomain.c_str(), "%lf,%lf,%lf,%lf", &x0, &y0, &x1,
                        &y1) != 4)
            throw pdrkit::ConfigError("--subdomain expects x0,y0,x1,y1, got: " +
                                      a.subdomain);
        opt.have_subdomain = true;
        opt.sub_x0 = x0;
        opt.sub_y0 = y0;
        opt.sub_x1 = x1;
        opt.sub_y1 = y1;
    }
    return opt;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(item, &pos);
            if (pos != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw pdrkit::ConfigError("bad sweep value: " + item);
        }
    }
    if (out.empty()) throw pdrkit::ConfigError("empty sweep value list");
    return out;
}

std::vector<double> default_values(const std::string& axis) {
    if (axis == "epsilon") return {1e-1, 1e-2, 1e-3};
    if (axis == "resolution") return {32, 64, 128};
    if (axis == "noise") return {1e-4, 1e-3, 1e-2};
    return {};
}

void print_metrics(const std::map<std::string, double>& metrics) {
    for (const auto& [k, v] : metrics)
        std::printf("%s = %s\n", k.c_str(), pdrkit::format_double(v).c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"power-density reconstruction toolkit"};
    app.require_subcommand(1);
    Args a;

    CLI::App* synth = app.add_subcommand(
        "synthesize", "solve the background and perturbed problems, write "
                      "solutions, H, dH and a manifest");
    add_common(synth, a, true, true);

    CLI::App* rec = app.add_subcommand(
        "reconstruct", "recover gamma and its trace from a measurement directory");
    rec->add_option("measurements", a.measure_dir, "measurement directory")
        ->required();
    add_common(rec, a, true, true);
    rec->add_flag("--estimate-condition", a.estimate_condition,
                  "estimate the smallest singular value of the coupled system");

    CLI::App* check = app.add_subcommand(
        "check-hypotheses", "evaluate the frame hypotheses without reconstructing");
    add_common(check, a, true, false);

    CLI::App* sweep = app.add_subcommand(
        "sweep", "run a study along one axis and write a column table");
    add_common(sweep, a, true, true);
    sweep->add_option("--axis", a.axis, "epsilon | resolution | noise")
        ->required();
    sweep->add_option("--values", a.values,
                      "comma-separated axis values (defaults per axis)");

    CLI::App* symbols = app.add_subcommand(
        "symbols-verify", "run the randomized symbol-identity battery");
    symbols->add_option("--seed", a.seed, "random seed");
    symbols->add_option("--samples", a.samples, "number of random samples");
    symbols->add_option("--out", a.out, "optional report directory");
    symbols->add_flag("--force", a.force, "overwrite outputs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            const pdrkit::Scenario sc =
                pdrkit::build_scenario(pdrkit::Config::from_file(a.config));
            print_metrics(pdrkit::run_synthesize(sc, make_options(a)));
            return 0;
        }
        if (rec->parsed()) {
            const pdrkit::Scenario sc =
                pdrkit::build_scenario(pdrkit::Config::from_file(a.config));
            print_metrics(
                pdrkit::run_reconstruct(a.measure_dir, sc, make_options(a)));
            return 0;
        }
        if (check->parsed()) {
            const pdrkit::Scenario sc =
                pdrkit::build_scenario(pdrkit::Config::from_file(a.config));
            const pdrkit::CheckReport rep =
                pdrkit::run_check(sc, make_options(a));
            for (const auto& h : rep.hypotheses)
                std::printf("%s %s: min %s (threshold %s), pass fraction %s\n",
                            h.all_pass() ? "pass" : "FAIL", h.name.c_str(),
                            pdrkit::format_double(h.min_value).c_str(),
                            pdrkit::format_double(h.threshold).c_str(),
                            pdrkit::format_double(h.pass_fraction).c_str());
            std::printf("frame-expression discrepancy: %s\n",
                        pdrkit::format_double(rep.mmat_discrepancy).c_str());
            return rep.pass ? 0 : 1;
        }
        if (sweep->parsed()) {
            const std::vector<double> values = a.values.empty()
                                                   ? default_values(a.axis)
                                                   : parse_values(a.values);
            const pdrkit::SweepResult res = pdrkit::run_sweep(
                pdrkit::Config::from_file(a.config), a.axis, values,
                make_options(a));
            std::printf("#");
            for (const auto& c : res.columns) std::printf(" %s", c.c_str());
            std::printf("\n");
            for (const auto& row : res.rows) {
                for (std::size_t i = 0; i < row.size(); ++i)
                    std::printf("%s%s", i ? "  " : "",
                                pdrkit::format_double(row[i]).c_str());
                std::printf("\n");
            }
            print_metrics(res.metrics);
            return 0;
        }
        if (symbols->parsed()) {
            const pdrkit::SymbolsReport rep =
                pdrkit::run_symbols_verify(a.seed, a.samples, make_options(a));
            for (const auto& c : rep.checks)
                std::printf("%s %s: max residual %s (threshold %s, %d samples)\n",
                            c.pass ? "pass" : "FAIL", c.name.c_str(),
                            pdrkit::format_double(c.max_residual).c_str(),
                            pdrkit::format_double(c.threshold).c_str(),
                            c.samples);
            return rep.pass ? 0 : 1;
        }
    } catch (const pdrkit::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
