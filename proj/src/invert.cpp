#include "pdrkit/invert.hpp"

#include <Eigen/SparseLU>
#include <cmath>

#include "pdrkit/errors.hpp"
#include "pdrkit/norms.hpp"
#include "pdrkit/stencils.hpp"

namespace pdrkit {

namespace {

Mat2 basis_H(const MeasurementSet& mset, std::size_t k) {
    Mat2 H;
    H << mset.H_at(1, 1)[k], mset.H_at(1, 2)[k], mset.H_at(1, 2)[k],
        mset.H_at(2, 2)[k];
    return H;
}

Mat2 basis_dH(const MeasurementSet& mset, std::size_t k) {
    Mat2 D;
    D << mset.dH_at(1, 1)[k], mset.dH_at(1, 2)[k], mset.dH_at(1, 2)[k],
        mset.dH_at(2, 2)[k];
    return D;
}

Mat2 grad_basis(const SolutionSet& set, std::size_t k) {
    Mat2 gu;
    gu.col(0) = set.sols[0].grad.get(k);
    gu.col(1) = set.sols[1].grad.get(k);
    return gu;
}

Mat2 invert_H(const Mat2& H, const Grid2D& grid, std::size_t k) {
    const double det = H.determinant();
    if (std::abs(det) <= 1e-14 * H.norm() * H.norm())
        throw MaskError("power-density matrix singular at node " +
                        std::to_string(k % grid.nx) + "," +
                        std::to_string(k / grid.nx));
    return H.inverse();
}

double cross2(const Vec2& a, const Vec2& b) { return a[0] * b[1] - a[1] * b[0]; }

} // namespace

SymMatrixField gamma_from_v(const SolutionSet& set, const MeasurementSet& mset,
                            const std::vector<ScalarField>& v) {
    require_same_grid(set.grid, mset.grid, "gamma recovery");
    std::array<VectorField, 2> gv{gradient(v.at(0)), gradient(v.at(1))};
    SymMatrixField gamma(set.grid);
    for (std::size_t k = 0; k < set.grid.num_nodes(); ++k) {
        const Mat2 Hinv = invert_H(basis_H(mset, k), set.grid, k);
        const Mat2 dH = basis_dH(mset, k);
        const Mat2 gU = grad_basis(set, k);
        Mat2 gV;
        gV.col(0) = gv[0].get(k);
        gV.col(1) = gv[1].get(k);
        const Mat2 g0 = set.gamma0.get(k);
        const Mat2 mid = gU * Hinv * dH * Hinv * gU.transpose() -
                         gV * Hinv * gU.transpose() -
                         gU * Hinv * gV.transpose();
        gamma.set(k, g0 * mid * g0); // set() symmetrizes the rounding skew
    }
    return gamma;
}

ScalarField trace_from_v(const SolutionSet& set, const MeasurementSet& mset,
                         const std::vector<ScalarField>& v) {
    require_same_grid(set.grid, mset.grid, "trace recovery");
    std::array<VectorField, 2> gv{gradient(v.at(0)), gradient(v.at(1))};
    ScalarField tr(set.grid);
    for (std::size_t k = 0; k < set.grid.num_nodes(); ++k) {
        const Mat2 Hinv = invert_H(basis_H(mset, k), set.grid, k);
        const Mat2 gU = grad_basis(set, k);
        const double det = gU.determinant();
        if (std::abs(det) <= 1e-14 * gU.norm() * gU.norm())
            throw MaskError("gradient basis singular at node " +
                            std::to_string(k));
        Mat2 gV;
        gV.col(0) = gv[0].get(k);
        gV.col(1) = gv[1].get(k);
        tr[k] = (Hinv * basis_dH(mset, k)).trace() -
                2.0 * (gV * gU.inverse()).trace();
    }
    return tr;
}

SourceData build_Y_omega_f(const SolutionSet& set, const MeasurementSet& mset,
                           const FrameData& frames) {
    require_same_grid(set.grid, mset.grid, "source assembly");
    const Grid2D& grid = set.grid;

    // s_q = H^{pq} (dH_{3,p} + mu_i dH_{ip});  Y_q = grad s_q
    std::array<ScalarField, 2> s{ScalarField(grid), ScalarField(grid)};
    for (std::size_t k = 0; k < grid.num_nodes(); ++k) {
        const Mat2 Hinv = invert_H(basis_H(mset, k), grid, k);
        const Vec2 mu = frames.mu.get(k);
        for (int q = 0; q < 2; ++q) {
            double acc = 0.0;
            for (int p = 0; p < 2; ++p) {
                double term = mset.dH_at(p + 1, 3)[k];
                for (int i = 0; i < 2; ++i)
                    term += mu[i] * mset.dH_at(i + 1, p + 1)[k];
                acc += Hinv(p, q) * term;
            }
            s[q][k] = acc;
        }
    }

    SourceData src;
    src.Y[0] = gradient(s[0]);
    src.Y[1] = gradient(s[1]);
    src.omega = ScalarField(grid);
    src.f = ScalarField(grid);
    for (std::size_t k = 0; k < grid.num_nodes(); ++k) {
        const Mat2 Hinv = invert_H(basis_H(mset, k), grid, k);
        const Mat2 g0 = set.gamma0.get(k);
        double om = 0.0, f = 0.0;
        for (int q = 0; q < 2; ++q) {
            const Vec2 guq = set.sols[q].grad.get(k);
            const Vec2 Yq = src.Y[q].get(k);
            om += cross2(Yq, guq);
            Vec2 lead = -Yq;
            for (int p = 0; p < 2; ++p)
                for (int i = 0; i < 2; ++i)
                    lead += Hinv(p, q) * mset.dH_at(i + 1, p + 1)[k] *
                            frames.Z.get(k).col(i);
            f += lead.dot(g0 * guq);
        }
        src.omega[k] = om;
        src.f[k] = f;
    }
    return src;
}

CoupledCoeffs build_W_f(const FrameData& frames, const SourceData& src,
                        const SymMatrixField& gamma0) {
    const Grid2D& grid = gamma0.grid;
    const VectorField div_g0 = divergence(gamma0);

    // per-column views of Z and Zstar, and the advected fields gamma0 Z_p
    std::array<VectorField, 2> Zs_col{VectorField(grid), VectorField(grid)};
    std::array<VectorField, 2> g0Z_col{VectorField(grid), VectorField(grid)};
    for (std::size_t k = 0; k < grid.num_nodes(); ++k) {
        const Mat2 Z = frames.Z.get(k);
        const Mat2 Zs = frames.Zstar.get(k);
        const Mat2 g0 = gamma0.get(k);
        for (int p = 0; p < 2; ++p) {
            Zs_col[p].set(k, Zs.col(p));
            g0Z_col[p].set(k, g0 * Z.col(p));
        }
    }

    // shared diagonal part: div gamma0 - (gamma0 Z_p . grad) Zstar_p
    VectorField diag(grid);
    for (int p = 0; p < 2; ++p) {
        const VectorField adv = directional_derivative(g0Z_col[p], Zs_col[p]);
        for (std::size_t k = 0; k < grid.num_nodes(); ++k)
            diag.set(k, diag.get(k) - adv.get(k) +
                            (p == 0 ? div_g0.get(k) : Vec2::Zero().eval()));
    }

    CoupledCoeffs out;
    for (int i = 0; i < 2; ++i) {
        out.fi[i] = ScalarField(grid);
        for (int j = 0; j < 2; ++j) out.W[i][j] = VectorField(grid);
    }
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const VectorField br = lie_bracket(Zs_col[i], g0Z_col[j]);
            VectorField& Wij = out.W[i][j];
            for (std::size_t k = 0; k < grid.num_nodes(); ++k) {
                Vec2 w = -br.get(k);
                if (i == j) w += diag.get(k);
                Wij.set(k, w);
                out.W_max = std::max(out.W_max, w.norm());
            }
        }
    }

    const VectorField grad_f = gradient(src.f);
    for (int i = 0; i < 2; ++i) {
        ScalarField& fi = out.fi[i];
        for (std::size_t k = 0; k < grid.num_nodes(); ++k)
            fi[k] = -Zs_col[i].get(k).dot(grad_f.get(k));
        for (int p = 0; p < 2; ++p) {
            ScalarField w(grid); // omega(Zstar_p, Zstar_i)
            for (std::size_t k = 0; k < grid.num_nodes(); ++k)
                w[k] = src.omega[k] *
                       cross2(Zs_col[p].get(k), Zs_col[i].get(k));
            const ScalarField adv = directional_derivative(g0Z_col[p], w);
            for (std::size_t k = 0; k < grid.num_nodes(); ++k) fi[k] += adv[k];
        }
    }
    return out;
}

CoupledResult solve_coupled(const EllipticOperator& op,
                            const CoupledCoeffs& coeffs,
                            bool estimate_condition) {
    const Grid2D& grid = op.grid();
    const InteriorMap& imap = op.interior_map();
    const auto ni = Eigen::Index(imap.size());
    const SparseMat& A = op.interior_matrix();

    // monolithic matrix: diag blocks A + first-order coupling, central
    // differences at interior nodes (neighbors on the boundary contribute
    // nothing since v = 0 there)
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(std::size_t(A.nonZeros()) * 2 + imap.size() * 8);
    for (int b = 0; b < 2; ++b)
        for (int c = 0; c < A.outerSize(); ++c)
            for (SparseMat::InnerIterator it(A, c); it; ++it)
                trip.emplace_back(int(b * ni + it.row()), int(b * ni + it.col()),
                                  it.value());

    const double ihx2 = 1.0 / (2.0 * grid.hx());
    const double ihy2 = 1.0 / (2.0 * grid.hy());
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const VectorField& W = coeffs.W[i][j];
            for (std::size_t r = 0; r < imap.size(); ++r) {
                const std::size_t node = imap.interior_to_node[r];
                const int gi = int(node) % grid.nx;
                const int gj = int(node) / grid.nx;
                const Vec2 w = W.get(node);
                const std::array<std::tuple<int, int, double>, 4> terms{
                    std::tuple{gi + 1, gj, w[0] * ihx2},
                    std::tuple{gi - 1, gj, -w[0] * ihx2},
                    std::tuple{gi, gj + 1, w[1] * ihy2},
                    std::tuple{gi, gj - 1, -w[1] * ihy2}};
                for (const auto& [ti, tj, val] : terms) {
                    const int col = imap.node_to_interior[grid.index(ti, tj)];
                    if (col >= 0 && val != 0.0)
                        trip.emplace_back(int(i * ni + Eigen::Index(r)),
                                          int(j * ni + col), val);
                }
            }
        }
    }

    SparseMat M(2 * ni, 2 * ni);
    M.setFromTriplets(trip.begin(), trip.end());
    M.makeCompressed();

    Eigen::VectorXd b(2 * ni);
    for (int i = 0; i < 2; ++i)
        for (std::size_t r = 0; r < imap.size(); ++r)
            b[i * ni + Eigen::Index(r)] = coeffs.fi[i][imap.interior_to_node[r]];

    Eigen::SparseLU<SparseMat> lu;
    lu.analyzePattern(M);
    lu.factorize(M);
    if (lu.info() != Eigen::Success)
        throw SolverError("coupled system factorization failed (the "
                          "homogeneous system may admit nontrivial solutions)");
    const Eigen::VectorXd x = lu.solve(b);
    if (!x.allFinite())
        throw SolverError("coupled system solve produced non-finite values");

    CoupledResult res;
    const double bn = b.norm();
    res.residual = bn > 0.0 ? (M * x - b).norm() / bn : (M * x - b).norm();

    res.v.assign(2, ScalarField(grid));
    for (int i = 0; i < 2; ++i)
        for (std::size_t r = 0; r < imap.size(); ++r)
            res.v[i][imap.interior_to_node[r]] = x[i * ni + Eigen::Index(r)];

    if (estimate_condition) {
        // inverse-power iteration on M^T M: sigma_min ~ 1/||y|| growth rate
        Eigen::SparseLU<SparseMat> lut;
        SparseMat Mt = SparseMat(M.transpose());
        Mt.makeCompressed();
        lut.analyzePattern(Mt);
        lut.factorize(Mt);
        if (lut.info() == Eigen::Success) {
            Eigen::VectorXd y = Eigen::VectorXd::Constant(2 * ni, 1.0);
            y.normalize();
            double sigma = 0.0;
            for (int it = 0; it < 30; ++it) {
                Eigen::VectorXd z = lu.solve(y);   // M z = y
                z = lut.solve(z);                  // M^T w = z
                const double nz = z.norm();
                if (!(nz > 0.0) || !z.allFinite()) break;
                sigma = 1.0 / std::sqrt(nz);
                y = z / nz;
            }
            res.smin_estimate = sigma;
        }
    }
    return res;
}

double trace_gradient_residual(const SolutionSet& set,
                               const MeasurementSet& mset,
                               const std::vector<ScalarField>& v,
                               const SymMatrixField& gamma_rec,
                               const ScalarField& trace_rec) {
    const Grid2D& grid = set.grid;

    // field-level ingredients: H^{-1}, B = H^{-1} dH H^{-1}, tr(H^{-1} dH)
    SymMatrixField Hinv_f(grid), B_f(grid);
    ScalarField trHdH(grid);
    for (std::size_t k = 0; k < grid.num_nodes(); ++k) {
        const Mat2 Hinv = invert_H(basis_H(mset, k), grid, k);
        const Mat2 dH = basis_dH(mset, k);
        Hinv_f.set(k, Hinv);
        B_f.set(k, Hinv * dH * Hinv);
        trHdH[k] = (Hinv * dH).trace();
    }

    auto component = [&grid](const SymMatrixField& F, int c) {
        ScalarField s(grid);
        for (std::size_t k = 0; k < grid.num_nodes(); ++k) s[k] = F.at(k)[c];
        return s;
    };
    std::array<VectorField, 3> gHinv{gradient(component(Hinv_f, 0)),
                                     gradient(component(Hinv_f, 1)),
                                     gradient(component(Hinv_f, 2))};
    std::array<VectorField, 3> gB{gradient(component(B_f, 0)),
                                  gradient(component(B_f, 1)),
                                  gradient(component(B_f, 2))};
    const VectorField g_trHdH = gradient(trHdH);
    const VectorField g_trace = gradient(trace_rec);
    std::array<VectorField, 2> gv{gradient(v.at(0)), gradient(v.at(1))};

    auto entry_grad = [](const std::array<VectorField, 3>& g, int j, int l,
                         std::size_t k) {
        const int c = (j == 0 && l == 0) ? 0 : (j == 1 && l == 1) ? 2 : 1;
        return g[c].get(k);
    };

    VectorField resid(grid);
    for (std::size_t k = 0; k < grid.num_nodes(); ++k) {
        const Mat2 g0 = set.gamma0.get(k);
        const Mat2 gam = gamma_rec.get(k);
        Vec2 rhs = 0.5 * g_trHdH.get(k);
        for (int j = 0; j < 2; ++j) {
            const Vec2 guj = set.sols[j].grad.get(k);
            const Vec2 gvj = gv[j].get(k);
            for (int l = 0; l < 2; ++l) {
                const Vec2 gul = set.sols[l].grad.get(k);
                const Vec2 gvl = gv[l].get(k);
                const Vec2 dHjl = entry_grad(gHinv, j, l, k);
                const Vec2 dBjl = entry_grad(gB, j, l, k);
                rhs += dHjl.dot(g0 * gul) * gvj;
                rhs += dHjl.dot(g0 * gvl) * guj;
                rhs += dHjl.dot(gam * gul) * guj;
                rhs -= dBjl.dot(g0 * gul) * guj;
            }
        }
        resid.set(k, 0.5 * g_trace.get(k) - rhs);
    }
    return norm_l2(resid);
}

InversionResult reconstruct(const SolutionSet& set, const MeasurementSet& mset,
                            const ReconstructOptions& opt) {
    InversionResult out;
    out.frames = compute_frames(set, opt.c0, opt.sigma_min, nullptr);

    const SourceData src = build_Y_omega_f(set, mset, out.frames);
    const CoupledCoeffs coeffs = build_W_f(out.frames, src, set.gamma0);

    EllipticOperator op(set.grid, set.gamma0);
    CoupledResult cres = solve_coupled(op, coeffs, opt.estimate_condition);

    out.v = std::move(cres.v);
    out.gamma_rec = gamma_from_v(set, mset, out.v);
    out.trace_rec = trace_from_v(set, mset, out.v);
    out.parts = decompose(out.gamma_rec, set.gamma0);

    // internal consistency: the trace identity and the pointwise split must
    // agree node by node
    double tid = 0.0;
    for (std::size_t k = 0; k < out.trace_rec.size(); ++k)
        tid = std::max(tid, std::abs(out.trace_rec[k] - out.parts.trace[k]));
    out.diagnostics["trace.identity_max"] = tid;

    out.diagnostics["solve.residual"] = cres.residual;
    if (opt.estimate_condition)
        out.diagnostics["solve.smin_estimate"] = cres.smin_estimate;
    out.diagnostics["hyp.det.min"] = out.frames.hyp_det.min_value;
    out.diagnostics["hyp.det.pass_fraction"] = out.frames.hyp_det.pass_fraction;
    out.diagnostics["hyp.Z.min"] = out.frames.hyp_Z.min_value;
    out.diagnostics["hyp.Z.pass_fraction"] = out.frames.hyp_Z.pass_fraction;
    out.diagnostics["frames.mmat_discrepancy_max"] =
        max_abs(out.frames.mmat_discrepancy);
    out.diagnostics["coupling.W_max"] = coeffs.W_max;
    if (opt.with_diagnostics)
        out.diagnostics["trace.gradient_residual"] = trace_gradient_residual(
            set, mset, out.v, out.gamma_rec, out.trace_rec);
    return out;
}

} // namespace pdrkit
