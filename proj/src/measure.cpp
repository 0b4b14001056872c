#include "pdrkit/measure.hpp"

#include <cmath>
#include <filesystem>

#include "pdrkit/errors.hpp"
#include "pdrkit/field_io.hpp"
#include "pdrkit/norms.hpp"
#include "pdrkit/stencils.hpp"

namespace pdrkit {

namespace fs = std::filesystem;

SolutionSet synthesize_solutions(const EllipticOperator& op,
                                 const std::vector<ScalarField>& g) {
    SolutionSet set{op.grid(), op.gamma0(), {}};
    set.sols.reserve(g.size());
    for (const auto& gi : g) {
        Solution s{op.solve_dirichlet(gi), VectorField(op.grid()),
                   SymMatrixField(op.grid())};
        s.grad = gradient(s.u);
        s.hess = hessian(s.u);
        set.sols.push_back(std::move(s));
    }
    return set;
}

ScalarField power_density(const SolutionSet& set, int i, int j) {
    const auto& gi = set.sols.at(i - 1).grad;
    const auto& gj = set.sols.at(j - 1).grad;
    ScalarField out(set.grid);
    for (std::size_t k = 0; k < set.grid.num_nodes(); ++k)
        out[k] = gi.get(k).dot(set.gamma0.get(k) * gj.get(k));
    return out;
}

ScalarField linearized_power_density(const SolutionSet& set,
                                     const SymMatrixField& gamma,
                                     const std::vector<ScalarField>& v, int i,
                                     int j) {
    require_same_grid(set.grid, gamma.grid, "linearized power density");
    const auto& gi = set.sols.at(i - 1).grad;
    const auto& gj = set.sols.at(j - 1).grad;
    const VectorField gvi = gradient(v.at(i - 1));
    const VectorField gvj = gradient(v.at(j - 1));
    ScalarField out(set.grid);
    for (std::size_t k = 0; k < set.grid.num_nodes(); ++k) {
        const Mat2 g0 = set.gamma0.get(k);
        out[k] = gi.get(k).dot(gamma.get(k) * gj.get(k)) +
                 gi.get(k).dot(g0 * gvj.get(k)) +
                 gj.get(k).dot(g0 * gvi.get(k));
    }
    return out;
}

namespace {

// (i,j), 1 <= i <= j <= m, lexicographic
int sym_pair_index(int i, int j, int m) {
    if (i > j) std::swap(i, j);
    if (i < 1 || j > m) throw Error("pair index out of range");
    return (i - 1) * m - (i - 1) * (i - 2) / 2 + (j - i);
}

} // namespace

const ScalarField& MeasurementSet::H_at(int i, int j) const {
    return H.at(sym_pair_index(i, j, m));
}

int MeasurementSet::num_dH_pairs(int m) {
    const int n = m - 1;
    return n * (n + 3) / 2;
}

std::pair<int, int> MeasurementSet::dH_pair(int k) {
    // stored order for m = 3: (1,1) (1,2) (1,3) (2,2) (2,3)
    const int n = kDim;
    int idx = 1;
    for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n + 1; ++j, ++idx)
            if (idx == k) return {i, j};
    throw Error("linearized pair index out of range");
}

const ScalarField& MeasurementSet::dH_at(int i, int j) const {
    if (i > j) std::swap(i, j);
    const int n = m - 1;
    if (i < 1 || i > n || j > m)
        throw Error("no linearized power density stored for pair (" +
                    std::to_string(i) + "," + std::to_string(j) + ")");
    // offset of (i,j) in the (1 <= i <= n, i <= j <= n+1) enumeration
    int idx = 0;
    for (int p = 1; p < i; ++p) idx += n + 2 - p;
    idx += j - i;
    return dH.at(idx);
}

MeasurementSet synthesize_measurements(const EllipticOperator& op,
                                       const SolutionSet& set,
                                       const SymMatrixField& gamma) {
    require_same_grid(set.grid, gamma.grid, "measurement synthesis");
    const int m = set.m();
    MeasurementSet mset;
    mset.grid = set.grid;
    mset.m = m;

    std::vector<ScalarField> v;
    v.reserve(m);
    for (int k = 0; k < m; ++k)
        v.push_back(op.solve_perturbation(gamma, set.sols[k].u));

    for (int i = 1; i <= m; ++i)
        for (int j = i; j <= m; ++j) mset.H.push_back(power_density(set, i, j));
    for (int k = 1; k <= MeasurementSet::num_dH_pairs(m); ++k) {
        auto [i, j] = MeasurementSet::dH_pair(k);
        mset.dH.push_back(linearized_power_density(set, gamma, v, i, j));
    }
    return mset;
}

ScalarField make_noise_field(const Grid2D& grid, double amplitude, Rng& rng) {
    // cosine modes up to a quarter of the per-axis node count keep the field
    // resolvable on the grid; coefficients are drawn before scaling so the
    // same seed yields the same shape at every amplitude
    const int K = (std::min(grid.nx, grid.ny) - 1) / 4;
    std::vector<double> coef((K + 1) * (K + 1));
    for (auto& c : coef) c = rng.normal();

    ScalarField f(grid);
    const double pi = 3.14159265358979323846;
    for (int p = 0; p <= K; ++p) {
        for (int q = 0; q <= K; ++q) {
            const double c = coef[p * (K + 1) + q];
            for (int j = 0; j < grid.ny; ++j) {
                const double cy = std::cos(pi * q * (grid.y(j) - grid.y0) / grid.Ly);
                for (int i = 0; i < grid.nx; ++i) {
                    const double cx =
                        std::cos(pi * p * (grid.x(i) - grid.x0) / grid.Lx);
                    f(i, j) += c * cx * cy;
                }
            }
        }
    }
    const double h1 = norm_h1(f);
    if (h1 > 0.0) {
        const double s = amplitude / h1;
        for (std::size_t k = 0; k < grid.num_nodes(); ++k) f[k] *= s;
    }
    return f;
}

void add_noise(MeasurementSet& mset, double amplitude, std::uint64_t seed) {
    Rng rng(seed);
    for (auto& d : mset.dH) {
        ScalarField w = make_noise_field(mset.grid, amplitude, rng);
        for (std::size_t k = 0; k < mset.grid.num_nodes(); ++k) d[k] += w[k];
    }
    mset.noise = NoiseInfo{amplitude, seed};
}

namespace {

std::string pair_name(const char* stem, int i, int j) {
    return std::string(stem) + std::to_string(i) + std::to_string(j) + ".pd1";
}

} // namespace

void save_measurements(const std::string& dir, const SolutionSet& set,
                       const MeasurementSet& mset,
                       const SymMatrixField* gamma_true) {
    fs::create_directories(dir);
    const fs::path base(dir);
    write_field((base / "gamma0.pd1").string(), set.gamma0);
    for (int k = 0; k < set.m(); ++k)
        write_field((base / ("u" + std::to_string(k + 1) + ".pd1")).string(),
                    set.sols[k].u);
    int idx = 0;
    for (int i = 1; i <= mset.m; ++i)
        for (int j = i; j <= mset.m; ++j)
            write_field((base / pair_name("H", i, j)).string(), mset.H[idx++]);
    for (int k = 1; k <= MeasurementSet::num_dH_pairs(mset.m); ++k) {
        auto [i, j] = MeasurementSet::dH_pair(k);
        write_field((base / pair_name("dH", i, j)).string(), mset.dH[k - 1]);
    }
    if (gamma_true)
        write_field((base / "gamma_true.pd1").string(), *gamma_true);

    std::map<std::string, std::string> manifest = mset.provenance;
    manifest["m"] = std::to_string(mset.m);
    manifest["noise.amplitude"] = format_double(mset.noise.amplitude);
    manifest["noise.seed"] = std::to_string(mset.noise.seed);
    manifest["has_gamma_true"] = gamma_true ? "1" : "0";
    write_kv_file((base / "manifest.txt").string(), manifest);
}

LoadedMeasurements load_measurements(const std::string& dir) {
    const fs::path base(dir);
    auto manifest = read_kv_file((base / "manifest.txt").string());
    const auto mit = manifest.find("m");
    if (mit == manifest.end())
        throw IoError("manifest missing solution count 'm': " + dir);
    const int m = std::stoi(mit->second);
    if (m < 2 || m > 9) throw IoError("unsupported solution count in " + dir);

    LoadedMeasurements out;
    out.set.gamma0 = read_symmat((base / "gamma0.pd1").string());
    out.set.grid = out.set.gamma0.grid;
    for (int k = 1; k <= m; ++k) {
        const std::string path = (base / ("u" + std::to_string(k) + ".pd1")).string();
        Solution s{read_scalar(path), VectorField(out.set.grid),
                   SymMatrixField(out.set.grid)};
        require_same_grid(out.set.grid, s.u.grid, path);
        s.grad = gradient(s.u);
        s.hess = hessian(s.u);
        out.set.sols.push_back(std::move(s));
    }

    out.mset.grid = out.set.grid;
    out.mset.m = m;
    for (int i = 1; i <= m; ++i)
        for (int j = i; j <= m; ++j) {
            const std::string path = (base / pair_name("H", i, j)).string();
            if (!fs::exists(path))
                throw IoError("missing power density for pair (" +
                              std::to_string(i) + "," + std::to_string(j) +
                              "): " + path);
            out.mset.H.push_back(read_scalar(path));
            require_same_grid(out.set.grid, out.mset.H.back().grid, path);
        }
    for (int k = 1; k <= MeasurementSet::num_dH_pairs(m); ++k) {
        auto [i, j] = MeasurementSet::dH_pair(k);
        const std::string path = (base / pair_name("dH", i, j)).string();
        if (!fs::exists(path))
            throw IoError("missing linearized power density for pair (" +
                          std::to_string(i) + "," + std::to_string(j) +
                          "): " + path);
        out.mset.dH.push_back(read_scalar(path));
        require_same_grid(out.set.grid, out.mset.dH.back().grid, path);
    }

    if (auto it = manifest.find("noise.amplitude"); it != manifest.end())
        out.mset.noise.amplitude = std::stod(it->second);
    if (auto it = manifest.find("noise.seed"); it != manifest.end())
        out.mset.noise.seed = std::stoull(it->second);
    for (const auto& [k, v] : manifest)
        if (k != "m" && k != "noise.amplitude" && k != "noise.seed" &&
            k != "has_gamma_true")
            out.mset.provenance[k] = v;

    if (manifest.count("has_gamma_true") && manifest.at("has_gamma_true") == "1") {
        out.gamma_true = read_symmat((base / "gamma_true.pd1").string());
        require_same_grid(out.set.grid, out.gamma_true.grid, "gamma_true.pd1");
        out.has_gamma_true = true;
    }
    return out;
}

} // namespace pdrkit
