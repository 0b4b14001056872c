#include "pdrkit/norms.hpp"

#include <cmath>

#include "pdrkit/stencils.hpp"

namespace pdrkit {

namespace {

double quad_weight(const Grid2D& g, int i, int j) {
    double w = 1.0;
    if (i == 0 || i == g.nx - 1) w *= 0.5;
    if (j == 0 || j == g.ny - 1) w *= 0.5;
    return w;
}

// pointwise squared magnitude summed with trapezoid weights
template <class F, class SqAt>
double l2sq(const F& f, SqAt&& sq) {
    const Grid2D& g = f.grid;
    double acc = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            acc += quad_weight(g, i, j) * sq(f.at(i, j));
    return acc * g.hx() * g.hy();
}

double sq1(const double* p) { return p[0] * p[0]; }
double sq2(const double* p) { return p[0] * p[0] + p[1] * p[1]; }
// Frobenius with symmetric storage [a11, a12, a22]
double sq3(const double* p) { return p[0] * p[0] + 2.0 * p[1] * p[1] + p[2] * p[2]; }

} // namespace

double norm_l2(const ScalarField& f) { return std::sqrt(l2sq(f, sq1)); }
double norm_l2(const VectorField& f) { return std::sqrt(l2sq(f, sq2)); }
double norm_l2(const SymMatrixField& f) { return std::sqrt(l2sq(f, sq3)); }

double norm_h1(const ScalarField& f) {
    VectorField g = gradient(f);
    return std::sqrt(l2sq(f, sq1) + l2sq(g, sq2));
}

double norm_h1(const SymMatrixField& f) {
    double acc = l2sq(f, sq3);
    ScalarField c(f.grid);
    for (int comp = 0; comp < 3; ++comp) {
        for (std::size_t k = 0; k < f.size(); ++k) c[k] = f.at(k)[comp];
        VectorField g = gradient(c);
        acc += (comp == 1 ? 2.0 : 1.0) * l2sq(g, sq2);
    }
    return std::sqrt(acc);
}

template <class F> static double maxabs(const F& f, int nc) {
    double m = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k)
        for (int c = 0; c < nc; ++c) m = std::max(m, std::abs(f.at(k)[c]));
    return m;
}

double max_abs(const ScalarField& f) { return maxabs(f, 1); }
double max_abs(const VectorField& f) { return maxabs(f, 2); }
double max_abs(const SymMatrixField& f) { return maxabs(f, 3); }

namespace {
template <class F> F diff(const F& a, const F& b, const char* what) {
    require_same_grid(a.grid, b.grid, what);
    F d(a.grid);
    for (std::size_t k = 0; k < d.data.size(); ++k) d.data[k] = a.data[k] - b.data[k];
    return d;
}
} // namespace

double rel_l2(const ScalarField& a, const ScalarField& b) {
    return norm_l2(diff(a, b, "rel_l2")) / norm_l2(b);
}
double rel_l2(const SymMatrixField& a, const SymMatrixField& b) {
    return norm_l2(diff(a, b, "rel_l2")) / norm_l2(b);
}
double rel_h1(const ScalarField& a, const ScalarField& b) {
    return norm_h1(diff(a, b, "rel_h1")) / norm_h1(b);
}

} // namespace pdrkit
