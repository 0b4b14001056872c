#include "pdrkit/microlocal.hpp"

#include <algorithm>
#include <cmath>

#include "pdrkit/errors.hpp"
#include "pdrkit/util.hpp"

namespace pdrkit {

namespace {

void require_nonzero(const Vec2& xi) {
    if (xi.squaredNorm() == 0.0) throw Error("zero frequency vector");
}

Vec2 rot90(const Vec2& v) { return Vec2(-v[1], v[0]); }

// l2 = xi . gamma0 xi and its x-gradient; l1_re = (div gamma0) . xi, the
// real factor of the first-order symbol l1 = -i l1_re
double sym_l2(const Mat2& gamma0, const Vec2& xi) { return xi.dot(gamma0 * xi); }

Vec2 grad_x_l2(const PointBackground& bg, const Vec2& xi) {
    return Vec2(xi.dot(bg.dgamma0[0] * xi), xi.dot(bg.dgamma0[1] * xi));
}

double sym_l1_re(const PointBackground& bg, const Vec2& xi) {
    Vec2 div = Vec2::Zero();
    for (int i = 0; i < 2; ++i) div += bg.dgamma0[i].row(i).transpose();
    return div.dot(xi);
}

// isometric coordinates of a symmetric matrix: (a11, sqrt(2) a12, a22)
Eigen::Vector3d s2_coords(const Mat2& m) {
    return Eigen::Vector3d(m(0, 0), std::sqrt(2.0) * m(0, 1), m(1, 1));
}

} // namespace

PointBackground TensorFunction::at(const Vec2& x) const {
    PointBackground bg;
    bg.gamma0 = value(x);
    bg.dgamma0 = {deriv(x, 0), deriv(x, 1)};
    return bg;
}

Mat2 sym_outer(const Vec2& a, const Vec2& b) {
    return 0.5 * (a * b.transpose() + b * a.transpose());
}

Mat2 symbol_M0(const Mat2& gamma0, const Vec2& xi, const Vec2& gu_i,
               const Vec2& gu_j) {
    require_nonzero(xi);
    const Mat2 a0 = spd_sqrt(gamma0);
    const Mat2 a0inv = a0.inverse();
    const Vec2 xi0 = a0 * xi;
    const Vec2 xh0 = xi0.normalized();
    const Vec2 vi = a0 * gu_i, vj = a0 * gu_j;
    const Mat2 mid = sym_outer(vi, vj) - (xh0.dot(vi)) * sym_outer(xh0, vj) -
                     (xh0.dot(vj)) * sym_outer(xh0, vi);
    return a0inv * mid * a0inv;
}

NullspaceReport nullspace_M0(const Mat2& gamma0,
                             const std::vector<Vec2>& gradu, const Vec2& xi) {
    require_nonzero(xi);
    const int n = int(gradu.size());
    if (n < 2) throw Error("nullspace scan needs at least two gradients");

    std::vector<Eigen::Vector3d> rows;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            rows.push_back(s2_coords(symbol_M0(gamma0, xi, gradu[i], gradu[j])));
    Eigen::MatrixXd R(rows.size(), 3);
    for (std::size_t r = 0; r < rows.size(); ++r) R.row(r) = rows[r];

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    NullspaceReport rep;
    rep.smax = sv(0);
    rep.smin = sv(sv.size() - 1);
    if (rep.smax == 0.0) {
        rep.dimension = 3;
        return rep;
    }
    for (int k = 0; k < sv.size(); ++k)
        if (sv(k) <= 1e-8 * rep.smax) ++rep.dimension;

    // expected direction: gamma0 xi ⊙ eta, eta a rotation of xi
    const Eigen::Vector3d expect =
        s2_coords(sym_outer(gamma0 * xi, rot90(xi))).normalized();
    const Eigen::Vector3d v = svd.matrixV().col(2);
    const double c = v.dot(expect);
    rep.angle = std::atan2((v - c * expect).norm(), std::abs(c));
    return rep;
}

double symbol_q2(const Mat2& gamma0, const Vec2& xi) {
    require_nonzero(xi);
    return 1.0 / sym_l2(gamma0, xi);
}

Cplx symbol_q3(const PointBackground& bg, const Vec2& xi) {
    require_nonzero(xi);
    const double l2 = sym_l2(bg.gamma0, xi);
    const double t = l2 * sym_l1_re(bg, xi) -
                     (2.0 * (bg.gamma0 * xi)).dot(grad_x_l2(bg, xi));
    return Cplx(0.0, t / (l2 * l2 * l2));
}

Vec2 vector_G(const PointBackground& bg, const Vec2& xi) {
    require_nonzero(xi);
    const Mat2 a0 = spd_sqrt(bg.gamma0);
    const Vec2 xi0 = a0 * xi;
    const double l2 = sym_l2(bg.gamma0, xi);
    const Vec2 grad_x_q2 = -grad_x_l2(bg, xi) / (l2 * l2);
    // i q_{-3} is real since q_{-3} is purely imaginary
    const double iq3 = -symbol_q3(bg, xi).imag();
    return xi0.squaredNorm() * (iq3 * xi0 + a0 * grad_x_q2);
}

Mat2c symbol_Mm1(const PointBackground& bg, const Vec2& xi, const Vec2& gu_i,
                 const Mat2& hess_i, const Vec2& gu_j, const Mat2& hess_j) {
    require_nonzero(xi);
    const Mat2 a0 = spd_sqrt(bg.gamma0);
    const Mat2 a0inv = a0.inverse();
    const Vec2 xi0 = a0 * xi;
    const double nx = xi0.norm();
    const Vec2 xh0 = xi0 / nx;
    const Vec2 vi = a0 * gu_i, vj = a0 * gu_j;
    const Mat2 hi = a0 * hess_i * a0, hj = a0 * hess_j * a0;
    const Vec2 G = vector_G(bg, xi);

    Mat2 mid = Mat2::Zero();
    mid += xh0.dot(vj) * (hi - 2.0 * sym_outer(xh0, hi * xh0)) +
           sym_outer(xh0, hi * vj);
    mid += xh0.dot(vi) * (hj - 2.0 * sym_outer(xh0, hj * xh0)) +
           sym_outer(xh0, hj * vi);
    mid += vj.dot(G) * sym_outer(xh0, vi) + vi.dot(G) * sym_outer(xh0, vj);
    const Mat2 real_part = (a0inv * mid * a0inv) / nx;
    return Cplx(0.0, 1.0) * real_part;
}

std::array<Vec2, 2> frame_xi(const Mat2& gamma0, const Vec2& xi) {
    require_nonzero(xi);
    const Mat2 a0 = spd_sqrt(gamma0);
    const Vec2 xh0 = (a0 * xi).normalized();
    return {xh0, rot90(xh0)};
}

Mat2 symbol_T(const Mat2& gamma0, const Vec2& xihat_p, const Vec2& xihat_q) {
    const Mat2 a0inv = spd_sqrt(gamma0).inverse();
    return a0inv * sym_outer(xihat_p, xihat_q) * a0inv;
}

Vec2 point_mu(const std::array<Vec2, 3>& gradu) {
    Mat2 gu;
    gu.col(0) = gradu[0];
    gu.col(1) = gradu[1];
    const double det = gu.determinant();
    if (std::abs(det) <= 1e-14 * gu.norm() * gu.norm())
        throw Error("gradient basis degenerate in frame-weight solve");
    return gu.inverse() * (-gradu[2]);
}

Mat2 point_Mmat(const Mat2& gamma0, const std::array<Vec2, 3>& gradu,
                const std::array<Mat2, 3>& hess) {
    const Vec2 mu = point_mu(gradu);
    const Mat2 a0 = spd_sqrt(gamma0);
    return a0 * (mu[0] * hess[0] + mu[1] * hess[1] + hess[2]) * a0;
}

namespace {

struct SampleData {
    PointBackground bg;
    Mat2 a0, a0inv;
    Vec2 xi, xi0, xh0, xh1;
    std::array<Vec2, 3> gu;  // gradients
    std::array<Mat2, 3> hs;  // hessians
    std::array<Vec2, 3> V;   // a0 * gu
    Vec2 mu;
    Mat2 MM;                 // sandwiched weighted Hessian sum
    Mat2 gamma;              // random symmetric test tensor
};

Mat2 random_sym(Rng& rng) {
    Mat2 m;
    const double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.0, 1.0),
                 c = rng.uniform(-1.0, 1.0);
    m << a, b, b, c;
    return m;
}

SampleData draw_sample(Rng& rng) {
    SampleData s;
    Mat2 A;
    A << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
        rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
    s.bg.gamma0 = A.transpose() * A + 0.1 * Mat2::Identity();
    s.bg.dgamma0 = {random_sym(rng), random_sym(rng)};
    s.a0 = spd_sqrt(s.bg.gamma0);
    s.a0inv = s.a0.inverse();

    const double th = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    s.xi = Vec2(std::cos(th), std::sin(th));
    s.xi0 = s.a0 * s.xi;
    s.xh0 = s.xi0.normalized();
    s.xh1 = rot90(s.xh0);

    // conditioning bound on the gradient basis keeps mu and H^{-1} tame
    do {
        for (auto& g : s.gu) g = Vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    } while (std::abs(s.gu[0][0] * s.gu[1][1] - s.gu[0][1] * s.gu[1][0]) < 0.3);
    s.mu = point_mu(s.gu);

    // conditioning bound on the weighted Hessian sum keeps its inverse tame
    do {
        for (auto& h : s.hs) h = random_sym(rng);
        s.MM = point_Mmat(s.bg.gamma0, s.gu, s.hs);
    } while (singular_values(s.MM).smin < 0.2);

    for (int i = 0; i < 3; ++i) s.V[i] = s.a0 * s.gu[i];
    s.gamma = random_sym(rng);
    return s;
}

struct CheckAccum {
    std::string name;
    double threshold;
    double max_residual = 0.0;
    void feed(double r) { max_residual = std::max(max_residual, r); }
};

} // namespace

std::vector<IdentityCheck> run_identity_battery(std::uint64_t seed,
                                                int nsamples) {
    std::vector<CheckAccum> acc = {
        {"M0-annihilates-flow-tangent", 1e-12, 0.0},
        {"M0-common-nullspace-dimension", 0.5, 0.0},
        {"M0-nullspace-direction", 1e-10, 0.0},
        {"q2-inverse-of-principal", 1e-15, 0.0},
        {"parametrix-degree-m1-cancellation", 1e-13, 0.0},
        {"combination-principal-vanishes", 1e-12, 0.0},
        {"combination-subprincipal-closed-form", 1e-12, 0.0},
        {"frame-orthonormal", 1e-14, 0.0},
        {"frame-complete", 1e-14, 0.0},
        {"trace-component-sum", 1e-13, 0.0},
        {"frame-change-of-basis", 1e-12, 0.0},
        {"parametrix-recovers-components", 1e-11, 0.0},
        {"weighted-data-recovers-mixed", 1e-11, 0.0},
        {"hessian-frame-decomposition", 1e-12, 0.0},
        {"homogeneity-M0", 1e-12, 0.0},
        {"homogeneity-Mm1", 1e-12, 0.0},
        {"homogeneity-q2", 1e-12, 0.0},
        {"homogeneity-q3", 1e-12, 0.0},
    };
    CheckAccum& an_tangent = acc[0];
    CheckAccum& an_dim = acc[1];
    CheckAccum& an_dir = acc[2];
    CheckAccum& an_q2 = acc[3];
    CheckAccum& an_cancel = acc[4];
    CheckAccum& an_L0 = acc[5];
    CheckAccum& an_Lm1 = acc[6];
    CheckAccum& an_orth = acc[7];
    CheckAccum& an_compl = acc[8];
    CheckAccum& an_trace = acc[9];
    CheckAccum& an_basis = acc[10];
    CheckAccum& an_param = acc[11];
    CheckAccum& an_mixed = acc[12];
    CheckAccum& an_decomp = acc[13];
    CheckAccum& an_h0 = acc[14];
    CheckAccum& an_hm1 = acc[15];
    CheckAccum& an_hq2 = acc[16];
    CheckAccum& an_hq3 = acc[17];

    for (int sidx = 0; sidx < nsamples; ++sidx) {
        Rng rng(seed + 0x9E3779B97F4A7C15ULL * std::uint64_t(sidx + 1));
        const SampleData s = draw_sample(rng);

        std::array<std::array<Mat2, 3>, 3> M0;
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
                M0[i][j] = symbol_M0(s.bg.gamma0, s.xi, s.gu[i], s.gu[j]);
                M0[j][i] = M0[i][j];
            }

        // principal symbol annihilates gamma0 xi ⊙ {xi}^perp
        const Mat2 tangent = sym_outer(s.bg.gamma0 * s.xi, rot90(s.xi));
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j)
                an_tangent.feed(std::abs((M0[i][j].array() * tangent.array()).sum()));

        // common nullspace: dimension 1, aligned with the tangent direction
        const NullspaceReport nrep = nullspace_M0(
            s.bg.gamma0, {s.gu[0], s.gu[1], s.gu[2]}, s.xi);
        an_dim.feed(std::abs(double(nrep.dimension - 1)));
        an_dir.feed(nrep.angle);

        // scalar parametrix pieces
        const double l2 = sym_l2(s.bg.gamma0, s.xi);
        const double q2 = symbol_q2(s.bg.gamma0, s.xi);
        const Cplx q3 = symbol_q3(s.bg, s.xi);
        an_q2.feed(std::abs(q2 * l2 - 1.0));
        {
            const Cplx l1(0.0, -sym_l1_re(s.bg, s.xi));
            const Vec2 grad_xi_q2 = -(2.0 * (s.bg.gamma0 * s.xi)) / (l2 * l2);
            const Cplx inv_i(0.0, -1.0);
            const Cplx resid = q2 * l1 + q3 * l2 +
                               inv_i * Cplx(grad_xi_q2.dot(grad_x_l2(s.bg, s.xi)), 0.0);
            an_cancel.feed(std::abs(resid));
        }

        // data combinations: principal part cancels, subprincipal matches
        // the weighted-Hessian closed form
        const Mat2 R = s.MM - 2.0 * sym_outer(s.xh0, s.MM * s.xh0);
        for (int i = 0; i < 2; ++i) {
            Mat2 sum0 = M0[i][2];
            Mat2c summ1 = symbol_Mm1(s.bg, s.xi, s.gu[i], s.hs[i], s.gu[2], s.hs[2]);
            for (int j = 0; j < 2; ++j) {
                sum0 += s.mu[j] * M0[i][j];
                summ1 += s.mu[j] * symbol_Mm1(s.bg, s.xi, s.gu[i], s.hs[i],
                                              s.gu[j], s.hs[j]);
            }
            an_L0.feed(sum0.cwiseAbs().maxCoeff());

            const Mat2c sandwiched = s.a0 * summ1 * s.a0;
            const Mat2 closed =
                (s.xh0.dot(s.V[i]) * R + sym_outer(s.xh0, s.MM * s.V[i])) /
                s.xi0.norm();
            an_Lm1.feed((sandwiched - Cplx(0.0, 1.0) * closed).cwiseAbs().maxCoeff());
        }

        // frame: orthonormal, complete, recovers canonical components
        const std::array<Vec2, 2> fr = frame_xi(s.bg.gamma0, s.xi);
        an_orth.feed(std::abs(fr[0].norm() - 1.0));
        an_orth.feed(std::abs(fr[1].norm() - 1.0));
        an_orth.feed(std::abs(fr[0].dot(fr[1])));
        an_compl.feed((fr[0] * fr[0].transpose() + fr[1] * fr[1].transpose() -
                       Mat2::Identity())
                          .cwiseAbs()
                          .maxCoeff());

        Mat2 Tsum = Mat2::Zero();
        std::array<std::array<Mat2, 2>, 2> T;
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q)
                T[p][q] = symbol_T(s.bg.gamma0, fr[p], fr[q]);
        Tsum = T[0][0] + T[1][1];
        an_trace.feed(std::abs((Tsum.array() * s.gamma.array()).sum() -
                               (s.bg.gamma0.inverse() * s.gamma).trace()));

        for (int ei = 0; ei < 2; ++ei)
            for (int ej = 0; ej < 2; ++ej) {
                Mat2 rec = Mat2::Zero();
                for (int p = 0; p < 2; ++p)
                    for (int q = 0; q < 2; ++q)
                        rec += (s.a0.row(ei).dot(fr[p])) *
                               (s.a0.row(ej).dot(fr[q])) * T[p][q];
                Mat2 expect = Mat2::Zero();
                expect(ei, ej) += 0.5;
                expect(ej, ei) += 0.5;
                an_basis.feed((rec - expect).cwiseAbs().maxCoeff());
            }

        // parametrix coefficients recover the frame components of the
        // principal symbol (basis pairs only)
        Mat2 H;
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) H(p, q) = s.V[p].dot(s.V[q]);
        const Mat2 Hinv = H.inverse();
        for (int alpha = 0; alpha < 2; ++alpha) {
            const Vec2 xa = alpha == 0 ? s.xh0 : s.xh1;
            Mat2 rec = Mat2::Zero();
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    double coef = 0.0;
                    for (int p = 0; p < 2; ++p)
                        for (int q = 0; q < 2; ++q)
                            coef += Hinv(q, j) * xa.dot(s.V[q]) * Hinv(p, i) *
                                    xa.dot(s.V[p]);
                    if (alpha == 0) coef = -coef;
                    rec += coef * M0[i][j];
                }
            const Mat2 expect = symbol_T(s.bg.gamma0, xa, xa);
            an_param.feed((rec - expect).cwiseAbs().maxCoeff());
        }

        // mixed components via the weighted combinations
        const Mat2 MMinv = s.MM.inverse();
        for (int alpha = 0; alpha < 2; ++alpha) {
            const Vec2 xa = alpha == 0 ? s.xh0 : s.xh1;
            Mat2 lhs = Mat2::Zero();
            for (int i = 0; i < 2; ++i) {
                double coef = 0.0;
                for (int p = 0; p < 2; ++p)
                    coef += Hinv(p, i) * xa.dot(MMinv * s.V[p]);
                const Mat2 Si =
                    (s.xh0.dot(s.V[i]) * R + sym_outer(s.xh0, s.MM * s.V[i])) /
                    s.xi0.norm();
                lhs += coef * Si;
            }
            const Mat2 rhs = (s.xh0.dot(MMinv * xa) * R + sym_outer(s.xh0, xa)) /
                             s.xi0.norm();
            an_mixed.feed((lhs - rhs).cwiseAbs().maxCoeff());
        }

        // decomposition of R over the frame
        {
            const Mat2 rhs = -(s.xh0.dot(s.MM * s.xh0)) * sym_outer(s.xh0, s.xh0) +
                             (s.xh1.dot(s.MM * s.xh1)) * sym_outer(s.xh1, s.xh1);
            an_decomp.feed((R - rhs).cwiseAbs().maxCoeff());
        }

        // homogeneity (relative residuals, non-dyadic scale)
        {
            const double t = 1.3;
            const Vec2 txi = t * s.xi;
            const Mat2 m0t = symbol_M0(s.bg.gamma0, txi, s.gu[0], s.gu[1]);
            an_h0.feed((m0t - M0[0][1]).cwiseAbs().maxCoeff() /
                       std::max(1.0, M0[0][1].cwiseAbs().maxCoeff()));
            const Mat2c m1 = symbol_Mm1(s.bg, s.xi, s.gu[0], s.hs[0], s.gu[1], s.hs[1]);
            const Mat2c m1t =
                symbol_Mm1(s.bg, txi, s.gu[0], s.hs[0], s.gu[1], s.hs[1]);
            an_hm1.feed((t * m1t - m1).cwiseAbs().maxCoeff() /
                        std::max(1.0, m1.cwiseAbs().maxCoeff()));
            an_hq2.feed(std::abs(t * t * symbol_q2(s.bg.gamma0, txi) - q2) /
                        std::max(1.0, std::abs(q2)));
            an_hq3.feed(std::abs(t * t * t * symbol_q3(s.bg, txi) - q3) /
                        std::max(1.0, std::abs(q3)));
        }
    }

    std::vector<IdentityCheck> out;
    out.reserve(acc.size());
    for (const auto& a : acc)
        out.push_back(IdentityCheck{a.name, nsamples, a.max_residual,
                                    a.threshold, a.max_residual <= a.threshold});
    return out;
}

Cplx composition_residual(const TensorFunction& bg, const Vec2& x,
                          const Vec2& xi) {
    require_nonzero(xi);
    const PointBackground pb = bg.at(x);
    const double l2 = sym_l2(pb.gamma0, xi);
    const Cplx l1(0.0, -sym_l1_re(pb, xi));
    const double q2 = symbol_q2(pb.gamma0, xi);
    const Cplx q3 = symbol_q3(pb, xi);

    const Vec2 grad_xi_q2 = -(2.0 * (pb.gamma0 * xi)) / (l2 * l2);
    // grad_xi q3 by central differences in xi
    const double hxi = 1e-6 * xi.norm();
    std::array<Cplx, 2> grad_xi_q3;
    for (int k = 0; k < 2; ++k) {
        Vec2 xp = xi, xm = xi;
        xp[k] += hxi;
        xm[k] -= hxi;
        grad_xi_q3[k] = (symbol_q3(pb, xp) - symbol_q3(pb, xm)) / (2.0 * hxi);
    }

    const Vec2 gx_l2 = grad_x_l2(pb, xi);
    // grad_x l1 by central differences of the derivative callback
    const double hx = 1e-5;
    std::array<Cplx, 2> grad_x_l1;
    auto l1_at = [&](const Vec2& p) {
        return Cplx(0.0, -sym_l1_re(bg.at(p), xi));
    };
    for (int k = 0; k < 2; ++k) {
        Vec2 xp = x, xm = x;
        xp[k] += hx;
        xm[k] -= hx;
        grad_x_l1[k] = (l1_at(xp) - l1_at(xm)) / (2.0 * hx);
    }

    const Cplx inv_i(0.0, -1.0);
    Cplx dot(0.0, 0.0);
    for (int k = 0; k < 2; ++k)
        dot += (Cplx(grad_xi_q2[k], 0.0) + grad_xi_q3[k]) *
               (Cplx(gx_l2[k], 0.0) + grad_x_l1[k]);
    return (Cplx(q2, 0.0) + q3) * (Cplx(l2, 0.0) + l1) + inv_i * dot - 1.0;
}

} // namespace pdrkit
