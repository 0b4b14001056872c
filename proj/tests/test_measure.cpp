#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <functional>

#include "pdrkit/measure.hpp"
#include "pdrkit/norms.hpp"
#include "pdrkit/scenario.hpp"

using namespace pdrkit;

namespace {

// constant identity background with the quadratic boundary triple
// g1 = x, g2 = y, g3 = (x^2 - y^2)/2: every power density is a polynomial
// the scheme reproduces exactly, so hand values are available everywhere
struct ModelCase {
    Grid2D grid;
    SymMatrixField gamma0;
    EllipticOperator op;
    SolutionSet set;

    explicit ModelCase(int n)
        : grid(Grid2D::unit_square(n)), gamma0(grid),
          op((fill_identity(gamma0), grid), gamma0),
          set(synthesize_solutions(op, boundary_triple(grid))) {}

    static const Grid2D& fill_identity(SymMatrixField& g0) {
        for (std::size_t k = 0; k < g0.size(); ++k) g0.set(k, Mat2::Identity());
        return g0.grid;
    }

    static std::vector<ScalarField> boundary_triple(const Grid2D& grid) {
        std::vector<ScalarField> g(3, ScalarField(grid));
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                const double x = grid.x(i), y = grid.y(j);
                g[0](i, j) = x;
                g[1](i, j) = y;
                g[2](i, j) = 0.5 * (x * x - y * y);
            }
        return g;
    }
};

SymMatrixField bump_perturbation(const Grid2D& grid) {
    SymMatrixField gamma(grid);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const double dx = grid.x(i) - 0.5, dy = grid.y(j) - 0.5;
            const double r2 = (dx * dx + dy * dy) / (0.3 * 0.3);
            if (r2 >= 1.0) continue;
            const double w = std::pow(1.0 - r2, 4);
            Mat2 m;
            m << 0.8 * w, 0.2 * w, 0.2 * w, 0.5 * w;
            gamma.set(i, j, m);
        }
    return gamma;
}

double max_field_diff(const ScalarField& a, const ScalarField& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        worst = std::max(worst, std::abs(a[k] - b[k]));
    return worst;
}

} // namespace

TEST_CASE("power densities match closed forms on the model case") {
    const ModelCase mc(17);
    const Grid2D& g = mc.grid;

    // grad u = (1,0), (0,1), (x,-y) with gamma0 = I:
    // H11 = 1, H12 = 0, H13 = x, H22 = 1, H23 = -y, H33 = x^2 + y^2
    const ScalarField h11 = power_density(mc.set, 1, 1);
    const ScalarField h12 = power_density(mc.set, 1, 2);
    const ScalarField h13 = power_density(mc.set, 1, 3);
    const ScalarField h33 = power_density(mc.set, 3, 3);
    double worst = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.x(i), y = g.y(j);
            worst = std::max(worst, std::abs(h11(i, j) - 1.0));
            worst = std::max(worst, std::abs(h12(i, j)));
            worst = std::max(worst, std::abs(h13(i, j) - x));
            worst = std::max(worst, std::abs(h33(i, j) - (x * x + y * y)));
        }
    CHECK(worst < 1e-13);
}

TEST_CASE("measurement sets index pairs symmetrically and in a fixed order") {
    const ModelCase mc(9);
    const MeasurementSet mset =
        synthesize_measurements(mc.op, mc.set, bump_perturbation(mc.grid));

    CHECK(mset.m == 3);
    CHECK(mset.H.size() == 6);                        // i <= j <= 3
    CHECK(MeasurementSet::num_dH_pairs(3) == 5);      // (11,12,13,22,23)
    CHECK(mset.dH.size() == 5);
    CHECK(MeasurementSet::dH_pair(1) == std::pair<int, int>(1, 1));
    CHECK(MeasurementSet::dH_pair(3) == std::pair<int, int>(1, 3));
    CHECK(MeasurementSet::dH_pair(5) == std::pair<int, int>(2, 3));

    // order-free accessors return the same field
    CHECK(&mset.H_at(1, 3) == &mset.H_at(3, 1));
    CHECK(&mset.dH_at(2, 1) == &mset.dH_at(1, 2));
    CHECK_THROWS_AS(mset.dH_at(3, 3), Error); // not a stored pair
}

TEST_CASE("linearized data vanishes identically for a zero perturbation") {
    const ModelCase mc(17);
    const SymMatrixField zero(mc.grid);
    const MeasurementSet mset = synthesize_measurements(mc.op, mc.set, zero);
    for (const ScalarField& f : mset.dH)
        for (double v : f.data) CHECK(v == 0.0);
}

TEST_CASE("linearized data is linear in the perturbation") {
    const ModelCase mc(17);
    const SymMatrixField ga = bump_perturbation(mc.grid);
    SymMatrixField gb(mc.grid);
    for (int j = 0; j < mc.grid.ny; ++j)
        for (int i = 0; i < mc.grid.nx; ++i) {
            const double x = mc.grid.x(i), y = mc.grid.y(j);
            Mat2 m;
            m << 0.1 * x, 0.05 * x * y, 0.05 * x * y, 0.1 * y;
            gb.set(i, j, m);
        }
    SymMatrixField sum(mc.grid);
    for (std::size_t k = 0; k < sum.data.size(); ++k)
        sum.data[k] = ga.data[k] + 2.0 * gb.data[k];

    const MeasurementSet ma = synthesize_measurements(mc.op, mc.set, ga);
    const MeasurementSet mb = synthesize_measurements(mc.op, mc.set, gb);
    const MeasurementSet ms = synthesize_measurements(mc.op, mc.set, sum);
    double worst = 0.0;
    for (std::size_t p = 0; p < ms.dH.size(); ++p)
        for (std::size_t k = 0; k < ms.dH[p].size(); ++k)
            worst = std::max(worst, std::abs(ms.dH[p][k] - ma.dH[p][k] -
                                             2.0 * mb.dH[p][k]));
    CHECK(worst < 1e-12);
}

TEST_CASE("linearized data matches the nonlinear finite difference") {
    // (H(gamma0 + eps*gamma) - H(gamma0)) / eps -> dH at first order in eps
    const ModelCase mc(33);
    const SymMatrixField gamma = bump_perturbation(mc.grid);
    const MeasurementSet base = synthesize_measurements(mc.op, mc.set, gamma);

    std::vector<double> epss{1e-2, 1e-3}, errs;
    for (double eps : epss) {
        SymMatrixField ge(mc.grid);
        for (std::size_t k = 0; k < ge.data.size(); ++k)
            ge.data[k] = mc.gamma0.data[k] + eps * gamma.data[k];
        const EllipticOperator ope(mc.grid, ge);
        const SolutionSet sete =
            synthesize_solutions(ope, ModelCase::boundary_triple(mc.grid));
        double worst = 0.0;
        for (int p = 1; p <= MeasurementSet::num_dH_pairs(3); ++p) {
            const auto [i, j] = MeasurementSet::dH_pair(p);
            const ScalarField he = power_density(sete, i, j);
            const ScalarField h0 = power_density(mc.set, i, j);
            ScalarField fd(mc.grid);
            for (std::size_t k = 0; k < fd.size(); ++k)
                fd[k] = (he[k] - h0[k]) / eps - base.dH_at(i, j)[k];
            worst = std::max(worst, max_abs(fd));
        }
        errs.push_back(worst);
    }
    // halving eps by 10 shrinks the defect by ~10 (first-order remainder)
    CHECK(errs[0] < 0.05);
    CHECK(errs[1] < 1.6 * errs[0] / 10.0);
}

TEST_CASE("noise fields are deterministic in the seed and H1-calibrated") {
    const Grid2D g = Grid2D::unit_square(33);
    Rng r1(1234), r2(1234), r3(99);
    const ScalarField n1 = make_noise_field(g, 0.25, r1);
    const ScalarField n2 = make_noise_field(g, 0.25, r2);
    const ScalarField n3 = make_noise_field(g, 0.25, r3);
    CHECK(n1.data == n2.data);
    CHECK(max_field_diff(n1, n3) > 1e-3); // different seed, different draw
    CHECK(norm_h1(n1) == doctest::Approx(0.25).epsilon(1e-10));

    // add_noise perturbs every linearized component by exactly that much
    const ModelCase mc(33);
    const SymMatrixField gamma = bump_perturbation(mc.grid);
    MeasurementSet clean = synthesize_measurements(mc.op, mc.set, gamma);
    MeasurementSet noisy = clean;
    add_noise(noisy, 0.1, 77);
    CHECK(noisy.noise.amplitude == 0.1);
    CHECK(noisy.noise.seed == 77);
    for (std::size_t p = 0; p < clean.dH.size(); ++p) {
        ScalarField diff(mc.grid);
        for (std::size_t k = 0; k < diff.size(); ++k)
            diff[k] = noisy.dH[p][k] - clean.dH[p][k];
        CHECK(norm_h1(diff) == doctest::Approx(0.1).epsilon(1e-10));
    }
    // H is left untouched
    for (std::size_t p = 0; p < clean.H.size(); ++p)
        CHECK(noisy.H[p].data == clean.H[p].data);

    // same seed and amplitude reproduce the same noisy set bit-for-bit
    MeasurementSet again = clean;
    add_noise(again, 0.1, 77);
    for (std::size_t p = 0; p < again.dH.size(); ++p)
        CHECK(again.dH[p].data == noisy.dH[p].data);
}

TEST_CASE("measurement directories round trip bit-for-bit") {
    const ModelCase mc(9);
    const SymMatrixField gamma = bump_perturbation(mc.grid);
    MeasurementSet mset = synthesize_measurements(mc.op, mc.set, gamma);
    mset.provenance["source"] = "test";

    const auto dir = std::filesystem::temp_directory_path() / "pdrkit_meas_rt";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    save_measurements(dir.string(), mc.set, mset, &gamma);

    const LoadedMeasurements back = load_measurements(dir.string());
    CHECK(back.set.grid.same_as(mc.grid));
    CHECK(back.set.m() == 3);
    CHECK(back.mset.m == 3);
    CHECK(back.set.gamma0.data == mc.set.gamma0.data);
    for (int s = 0; s < 3; ++s) {
        CHECK(back.set.sols[s].u.data == mc.set.sols[s].u.data);
        CHECK(back.set.sols[s].grad.data == mc.set.sols[s].grad.data);
        CHECK(back.set.sols[s].hess.data == mc.set.sols[s].hess.data);
    }
    for (std::size_t p = 0; p < mset.H.size(); ++p)
        CHECK(back.mset.H[p].data == mset.H[p].data);
    for (std::size_t p = 0; p < mset.dH.size(); ++p)
        CHECK(back.mset.dH[p].data == mset.dH[p].data);
    REQUIRE(back.has_gamma_true);
    CHECK(back.gamma_true.data == gamma.data);
    CHECK(back.mset.provenance.at("source") == "test");

    std::filesystem::remove_all(dir);
}

TEST_CASE("loading a damaged measurement directory names the missing piece") {
    const ModelCase mc(9);
    MeasurementSet mset =
        synthesize_measurements(mc.op, mc.set, bump_perturbation(mc.grid));
    const auto dir = std::filesystem::temp_directory_path() / "pdrkit_meas_bad";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    save_measurements(dir.string(), mc.set, mset, nullptr);

    const LoadedMeasurements ok = load_measurements(dir.string());
    CHECK_FALSE(ok.has_gamma_true);

    // removing one linearized component must fail loudly, naming the pair
    REQUIRE(std::filesystem::remove(dir / "dH23.pd1"));
    bool threw = false;
    try {
        load_measurements(dir.string());
    } catch (const IoError& e) {
        threw = true;
        CHECK(std::string(e.what()).find("(2,3)") != std::string::npos);
    }
    CHECK(threw);

    CHECK_THROWS_AS(load_measurements((dir / "nope").string()), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("solution sets carry stencil derivatives of the solved fields") {
    const ModelCase mc(17);
    // u3 = (x^2 - y^2)/2 is reproduced exactly, so its attached derivatives
    // are the exact gradient (x, -y) and Hessian diag(1, -1)
    const Grid2D& g = mc.grid;
    double worst = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 gr = mc.set.sols[2].grad.get(i, j);
            worst = std::max(worst,
                             (gr - Vec2(g.x(i), -g.y(j))).cwiseAbs().maxCoeff());
            Mat2 h;
            h << 1.0, 0.0, 0.0, -1.0;
            worst = std::max(
                worst, (mc.set.sols[2].hess.get(i, j) - h).cwiseAbs().maxCoeff());
        }
    CHECK(worst < 1e-10);
}
