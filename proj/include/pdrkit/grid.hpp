#pragma once

#include <cstddef>
#include <string>

#include "pdrkit/errors.hpp"

namespace pdrkit {

// Uniform tensor grid on the rectangle [x0, x0+Lx] x [y0, y0+Ly].
// Nodes are indexed (i, j) with 0 <= i < nx, 0 <= j < ny and stored
// row-major in j (flat index j*nx + i).
struct Grid2D {
    int nx = 0, ny = 0;
    double x0 = 0.0, y0 = 0.0, Lx = 1.0, Ly = 1.0;

    Grid2D() = default;
    Grid2D(int nx_, int ny_, double x0_, double y0_, double Lx_, double Ly_)
        : nx(nx_), ny(ny_), x0(x0_), y0(y0_), Lx(Lx_), Ly(Ly_) {
        if (nx < 3 || ny < 3) throw GridError("grid needs at least 3 nodes per axis");
        if (!(Lx > 0.0) || !(Ly > 0.0)) throw GridError("grid extents must be positive");
    }

    static Grid2D unit_square(int n) { return Grid2D(n, n, 0.0, 0.0, 1.0, 1.0); }

    double hx() const { return Lx / (nx - 1); }
    double hy() const { return Ly / (ny - 1); }
    std::size_t num_nodes() const { return std::size_t(nx) * std::size_t(ny); }

    std::size_t index(int i, int j) const { return std::size_t(j) * nx + i; }
    double x(int i) const { return x0 + i * hx(); }
    double y(int j) const { return y0 + j * hy(); }
    bool is_boundary(int i, int j) const {
        return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
    }

    bool same_as(const Grid2D& o) const {
        return nx == o.nx && ny == o.ny && x0 == o.x0 && y0 == o.y0 && Lx == o.Lx &&
               Ly == o.Ly;
    }
};

inline void require_same_grid(const Grid2D& a, const Grid2D& b,
                              const std::string& what) {
    if (!a.same_as(b)) throw GridError("grid mismatch in " + what);
}

} // namespace pdrkit
