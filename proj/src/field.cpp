#include "pdrkit/field.hpp"

#include <cmath>

#include "pdrkit/errors.hpp"

namespace pdrkit {

SymMatrixField::Ellipticity SymMatrixField::ellipticity() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = 0; k < size(); ++k) {
        const double* p = at(k);
        double mean = 0.5 * (p[0] + p[2]);
        double disc = std::hypot(0.5 * (p[0] - p[2]), p[1]);
        lo = std::min(lo, mean - disc);
        hi = std::max(hi, mean + disc);
    }
    return {lo, hi};
}

Mat2 spd_sqrt(const Mat2& s) {
    double tr = s(0, 0) + s(1, 1);
    double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    double mean = 0.5 * tr;
    double disc = std::hypot(0.5 * (s(0, 0) - s(1, 1)), 0.5 * (s(0, 1) + s(1, 0)));
    if (mean - disc <= 0.0) throw EllipticityError("spd_sqrt: matrix is not positive definite");
    // Cayley-Hamilton: (S + sqrt(det) I)^2 = (tr + 2 sqrt(det)) S
    double rd = std::sqrt(det);
    return (s + rd * Mat2::Identity()) / std::sqrt(tr + 2.0 * rd);
}

Sv2 singular_values(const Mat2& m) {
    double p = m.squaredNorm();
    double q = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    double disc = std::sqrt(std::max(0.0, p * p - 4.0 * q * q));
    double smax2 = 0.5 * (p + disc);
    double smin2 = smax2 > 0.0 ? (q * q) / smax2 : 0.0; // avoids cancellation
    return {std::sqrt(smin2), std::sqrt(smax2)};
}

Decomposition decompose(const SymMatrixField& gamma, const SymMatrixField& gamma0) {
    require_same_grid(gamma.grid, gamma0.grid, "decompose");
    if (!gamma0.ellipticity().uniformly_elliptic())
        throw EllipticityError("decompose: background tensor is not uniformly elliptic");
    Decomposition d{ScalarField(gamma.grid), SymMatrixField(gamma.grid)};
    for (std::size_t k = 0; k < gamma.size(); ++k) {
        Mat2 g0 = gamma0.get(k);
        Mat2 g = gamma.get(k);
        double t = (g0.inverse() * g).trace();
        d.trace[k] = t;
        d.dev.set(k, g - 0.5 * t * g0);
    }
    return d;
}

SymMatrixField recompose(const Decomposition& d, const SymMatrixField& gamma0) {
    require_same_grid(d.trace.grid, gamma0.grid, "recompose");
    SymMatrixField g(gamma0.grid);
    for (std::size_t k = 0; k < g.size(); ++k)
        g.set(k, 0.5 * d.trace[k] * gamma0.get(k) + d.dev.get(k));
    return g;
}

} // namespace pdrkit
