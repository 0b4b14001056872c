#include "pdrkit/frames.hpp"

#include <cmath>
#include <limits>

#include "pdrkit/errors.hpp"
#include "pdrkit/stencils.hpp"

namespace pdrkit {

namespace {

bool in_mask(const ScalarField* mask, std::size_t node) {
    return mask == nullptr || (*mask)[node] > 0.5;
}

std::string node_label(const Grid2D& g, std::size_t node) {
    const int j = int(node) / g.nx;
    const int i = int(node) % g.nx;
    return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

} // namespace

ScalarField det_grad_basis(const SolutionSet& set) {
    if (set.m() < kDim) throw Error("solution set too small for a basis");
    ScalarField det(set.grid);
    const auto& g1 = set.sols[0].grad;
    const auto& g2 = set.sols[1].grad;
    for (std::size_t k = 0; k < set.grid.num_nodes(); ++k) {
        const Vec2 a = g1.get(k), b = g2.get(k);
        det[k] = a[0] * b[1] - a[1] * b[0];
    }
    return det;
}

HypothesisReport check_hyp_det(const SolutionSet& set, double c0,
                               const ScalarField* region) {
    const ScalarField det = det_grad_basis(set);
    HypothesisReport rep;
    rep.name = "basis-determinant";
    rep.threshold = c0;
    rep.mask = ScalarField(set.grid);
    double minv = std::numeric_limits<double>::infinity();
    std::size_t total = 0, passed = 0;
    for (std::size_t k = 0; k < set.grid.num_nodes(); ++k) {
        if (!in_mask(region, k)) continue;
        ++total;
        const double d = std::abs(det[k]);
        minv = std::min(minv, d);
        if (d >= c0) {
            rep.mask[k] = 1.0;
            ++passed;
        }
    }
    rep.min_value = total ? minv : 0.0;
    rep.pass_fraction = total ? double(passed) / double(total) : 0.0;
    return rep;
}

VectorField compute_mu(const SolutionSet& set, const ScalarField* mask) {
    if (set.m() < kDim + 1)
        throw Error("need n+1 solutions to form the frame weights");
    VectorField mu(set.grid);
    const auto& g1 = set.sols[0].grad;
    const auto& g2 = set.sols[1].grad;
    const auto& g3 = set.sols[2].grad;
    for (std::size_t k = 0; k < set.grid.num_nodes(); ++k) {
        if (!in_mask(mask, k)) continue;
        const Vec2 a = g1.get(k), b = g2.get(k), c = g3.get(k);
        const double det = a[0] * b[1] - a[1] * b[0];
        if (std::abs(det) <= 1e-14 * a.norm() * b.norm())
            throw MaskError("gradient basis degenerate at node " +
                            node_label(set.grid, k));
        // [grad u_1 | grad u_2] mu = -grad u_3, by Cramer's rule
        mu.set(k, Vec2((-c[0] * b[1] + c[1] * b[0]) / det,
                       (-a[0] * c[1] + a[1] * c[0]) / det));
    }
    return mu;
}

MatrixField compute_Z(const VectorField& mu) {
    ScalarField m1(mu.grid), m2(mu.grid);
    for (std::size_t k = 0; k < mu.grid.num_nodes(); ++k) {
        const Vec2 v = mu.get(k);
        m1[k] = v[0];
        m2[k] = v[1];
    }
    const VectorField z1 = gradient(m1), z2 = gradient(m2);
    MatrixField Z(mu.grid);
    for (std::size_t k = 0; k < mu.grid.num_nodes(); ++k) {
        Mat2 m;
        m.col(0) = z1.get(k);
        m.col(1) = z2.get(k);
        Z.set(k, m);
    }
    return Z;
}

ScalarField sigma_min_Z(const MatrixField& Z) {
    ScalarField s(Z.grid);
    for (std::size_t k = 0; k < Z.grid.num_nodes(); ++k)
        s[k] = singular_values(Z.get(k)).smin;
    return s;
}

ScalarField cond_Z(const MatrixField& Z) {
    ScalarField c(Z.grid);
    for (std::size_t k = 0; k < Z.grid.num_nodes(); ++k) {
        const Sv2 sv = singular_values(Z.get(k));
        c[k] = sv.smin > 0.0 ? sv.smax / sv.smin
                             : std::numeric_limits<double>::infinity();
    }
    return c;
}

HypothesisReport check_hyp_Z(const MatrixField& Z, double threshold,
                             const ScalarField* region) {
    const ScalarField s = sigma_min_Z(Z);
    HypothesisReport rep;
    rep.name = "frame-gradient-rank";
    rep.threshold = threshold;
    rep.mask = ScalarField(Z.grid);
    double minv = std::numeric_limits<double>::infinity();
    std::size_t total = 0, passed = 0;
    for (std::size_t k = 0; k < Z.grid.num_nodes(); ++k) {
        if (!in_mask(region, k)) continue;
        ++total;
        minv = std::min(minv, s[k]);
        if (s[k] >= threshold) {
            rep.mask[k] = 1.0;
            ++passed;
        }
    }
    rep.min_value = total ? minv : 0.0;
    rep.pass_fraction = total ? double(passed) / double(total) : 0.0;
    return rep;
}

MatrixField dual_frame(const MatrixField& Z, const ScalarField* mask) {
    MatrixField Zs(Z.grid);
    for (std::size_t k = 0; k < Z.grid.num_nodes(); ++k) {
        if (!in_mask(mask, k)) continue;
        const Mat2 z = Z.get(k);
        const double det = z.determinant();
        if (std::abs(det) <= 1e-14 * z.norm() * z.norm())
            throw MaskError("frame gradient matrix singular at node " +
                            node_label(Z.grid, k));
        Zs.set(k, z.inverse().transpose());
    }
    return Zs;
}

SymMatrixField compute_Mmat(const SolutionSet& set, const VectorField& mu) {
    SymMatrixField M(set.grid);
    for (std::size_t k = 0; k < set.grid.num_nodes(); ++k) {
        const Vec2 w = mu.get(k);
        Mat2 sum = set.sols[2].hess.get(k);
        sum += w[0] * set.sols[0].hess.get(k) + w[1] * set.sols[1].hess.get(k);
        const Mat2 a0 = spd_sqrt(set.gamma0.get(k));
        M.set(k, a0 * sum * a0);
    }
    return M;
}

ScalarField mmat_frame_discrepancy(const SolutionSet& set, const MatrixField& Z,
                                   const SymMatrixField& Mmat) {
    ScalarField d(set.grid);
    const auto& g1 = set.sols[0].grad;
    const auto& g2 = set.sols[1].grad;
    for (std::size_t k = 0; k < set.grid.num_nodes(); ++k) {
        Mat2 gu;
        gu.col(0) = g1.get(k);
        gu.col(1) = g2.get(k);
        const Mat2 a0 = spd_sqrt(set.gamma0.get(k));
        const Mat2 frame = -a0 * Z.get(k) * gu.transpose() * a0;
        d[k] = (Mmat.get(k) - frame).norm();
    }
    return d;
}

FrameData compute_frames(const SolutionSet& set, double c0, double sigma_min,
                         const ScalarField* region) {
    FrameData fd;
    fd.hyp_det = check_hyp_det(set, c0, region);
    fd.mu = compute_mu(set, &fd.hyp_det.mask);
    fd.Z = compute_Z(fd.mu);
    fd.hyp_Z = check_hyp_Z(fd.Z, sigma_min, &fd.hyp_det.mask);
    fd.Zstar = dual_frame(fd.Z, &fd.hyp_Z.mask);
    fd.Mmat = compute_Mmat(set, fd.mu);
    fd.mmat_discrepancy = mmat_frame_discrepancy(set, fd.Z, fd.Mmat);
    return fd;
}

} // namespace pdrkit
