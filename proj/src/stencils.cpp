#include "pdrkit/stencils.hpp"

namespace pdrkit {

namespace {

// d/dx along a grid line: central inside, 2nd-order one-sided at the ends
inline double d1(const ScalarField& f, int i, int j, int di, int dj, double h, int n,
                 int pos) {
    if (pos > 0 && pos < n - 1)
        return (f(i + di, j + dj) - f(i - di, j - dj)) / (2.0 * h);
    if (pos == 0)
        return (-3.0 * f(i, j) + 4.0 * f(i + di, j + dj) - f(i + 2 * di, j + 2 * dj)) /
               (2.0 * h);
    return (3.0 * f(i, j) - 4.0 * f(i - di, j - dj) + f(i - 2 * di, j - 2 * dj)) /
           (2.0 * h);
}

inline double d2(const ScalarField& f, int i, int j, int di, int dj, double h, int n,
                 int pos) {
    double h2 = h * h;
    if (pos > 0 && pos < n - 1)
        return (f(i - di, j - dj) - 2.0 * f(i, j) + f(i + di, j + dj)) / h2;
    if (pos == 0)
        return (2.0 * f(i, j) - 5.0 * f(i + di, j + dj) + 4.0 * f(i + 2 * di, j + 2 * dj) -
                f(i + 3 * di, j + 3 * dj)) /
               h2;
    return (2.0 * f(i, j) - 5.0 * f(i - di, j - dj) + 4.0 * f(i - 2 * di, j - 2 * dj) -
            f(i - 3 * di, j - 3 * dj)) /
           h2;
}

} // namespace

VectorField gradient(const ScalarField& f) {
    const Grid2D& g = f.grid;
    VectorField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out.set(i, j,
                    Vec2(d1(f, i, j, 1, 0, g.hx(), g.nx, i),
                         d1(f, i, j, 0, 1, g.hy(), g.ny, j)));
    return out;
}

SymMatrixField hessian(const ScalarField& f) {
    const Grid2D& g = f.grid;
    if (g.nx < 4 || g.ny < 4)
        throw GridError("hessian needs at least 4 nodes per axis");
    VectorField gr = gradient(f);
    ScalarField gy(g);
    for (std::size_t k = 0; k < gy.size(); ++k) gy[k] = gr.at(k)[1];
    ScalarField gx(g);
    for (std::size_t k = 0; k < gx.size(); ++k) gx[k] = gr.at(k)[0];
    VectorField dgy = gradient(gy); // x-component = dx dy f
    VectorField dgx = gradient(gx); // y-component = dy dx f
    SymMatrixField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double* p = out.at(i, j);
            p[0] = d2(f, i, j, 1, 0, g.hx(), g.nx, i);
            p[1] = 0.5 * (dgy.get(i, j)[0] + dgx.get(i, j)[1]);
            p[2] = d2(f, i, j, 0, 1, g.hy(), g.ny, j);
        }
    return out;
}

MatrixField jacobian(const VectorField& X) {
    ScalarField c0(X.grid), c1(X.grid);
    for (std::size_t k = 0; k < X.size(); ++k) {
        c0[k] = X.at(k)[0];
        c1[k] = X.at(k)[1];
    }
    VectorField g0 = gradient(c0), g1 = gradient(c1);
    MatrixField out(X.grid);
    for (std::size_t k = 0; k < X.size(); ++k) {
        Mat2 m;
        m << g0.at(k)[0], g0.at(k)[1], g1.at(k)[0], g1.at(k)[1];
        out.set(k, m);
    }
    return out;
}

ScalarField directional_derivative(const VectorField& X, const ScalarField& s) {
    require_same_grid(X.grid, s.grid, "directional_derivative");
    VectorField gs = gradient(s);
    ScalarField out(s.grid);
    for (std::size_t k = 0; k < s.size(); ++k) out[k] = X.get(k).dot(gs.get(k));
    return out;
}

VectorField directional_derivative(const VectorField& X, const VectorField& Y) {
    require_same_grid(X.grid, Y.grid, "directional_derivative");
    MatrixField J = jacobian(Y);
    VectorField out(Y.grid);
    for (std::size_t k = 0; k < Y.size(); ++k) out.set(k, J.get(k) * X.get(k));
    return out;
}

VectorField lie_bracket(const VectorField& X, const VectorField& Y) {
    VectorField a = directional_derivative(X, Y);
    VectorField b = directional_derivative(Y, X);
    VectorField out(X.grid);
    for (std::size_t k = 0; k < X.size(); ++k) out.set(k, a.get(k) - b.get(k));
    return out;
}

VectorField divergence(const SymMatrixField& T) {
    ScalarField a(T.grid), b(T.grid), c(T.grid);
    for (std::size_t k = 0; k < T.size(); ++k) {
        const double* p = T.at(k);
        a[k] = p[0];
        b[k] = p[1];
        c[k] = p[2];
    }
    VectorField ga = gradient(a), gb = gradient(b), gc = gradient(c);
    VectorField out(T.grid);
    for (std::size_t k = 0; k < T.size(); ++k)
        out.set(k, Vec2(ga.at(k)[0] + gb.at(k)[1], gb.at(k)[0] + gc.at(k)[1]));
    return out;
}

} // namespace pdrkit
