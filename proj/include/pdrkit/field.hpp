#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pdrkit/grid.hpp"

namespace pdrkit {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class FieldKind { scalar, vector, symmat };

inline int ncomp_of(FieldKind k) {
    switch (k) {
    case FieldKind::scalar: return 1;
    case FieldKind::vector: return 2;
    default: return 3;
    }
}

namespace detail {
// shared flat storage: node-major, component-minor
template <int NC> struct FieldBase {
    Grid2D grid;
    std::vector<double> data; // size num_nodes * NC

    FieldBase() = default;
    explicit FieldBase(const Grid2D& g) : grid(g), data(g.num_nodes() * NC, 0.0) {}

    std::size_t size() const { return grid.num_nodes(); }
    double* at(std::size_t node) { return data.data() + node * NC; }
    const double* at(std::size_t node) const { return data.data() + node * NC; }
    double* at(int i, int j) { return at(grid.index(i, j)); }
    const double* at(int i, int j) const { return at(grid.index(i, j)); }
};
} // namespace detail

struct ScalarField : detail::FieldBase<1> {
    using FieldBase::FieldBase;
    double& operator()(int i, int j) { return *at(i, j); }
    double operator()(int i, int j) const { return *at(i, j); }
    double& operator[](std::size_t node) { return data[node]; }
    double operator[](std::size_t node) const { return data[node]; }
};

struct VectorField : detail::FieldBase<2> {
    using FieldBase::FieldBase;
    Vec2 get(std::size_t node) const {
        const double* p = at(node);
        return Vec2(p[0], p[1]);
    }
    Vec2 get(int i, int j) const { return get(grid.index(i, j)); }
    void set(std::size_t node, const Vec2& v) {
        double* p = at(node);
        p[0] = v[0];
        p[1] = v[1];
    }
    void set(int i, int j, const Vec2& v) { set(grid.index(i, j), v); }
};

// symmetric 2x2 per node, components stored [a11, a12, a22]
struct SymMatrixField : detail::FieldBase<3> {
    using FieldBase::FieldBase;
    Mat2 get(std::size_t node) const {
        const double* p = at(node);
        Mat2 m;
        m << p[0], p[1], p[1], p[2];
        return m;
    }
    Mat2 get(int i, int j) const { return get(grid.index(i, j)); }
    void set(std::size_t node, const Mat2& m) {
        double* p = at(node);
        p[0] = m(0, 0);
        p[1] = 0.5 * (m(0, 1) + m(1, 0));
        p[2] = m(1, 1);
    }
    void set(int i, int j, const Mat2& m) { set(grid.index(i, j), m); }

    // eigenvalue range over all nodes (closed-form symmetric 2x2 eigenvalues)
    struct Ellipticity {
        double lambda_min, lambda_max;
        bool uniformly_elliptic() const { return lambda_min > 0.0; }
    };
    Ellipticity ellipticity() const;
};

// general 2x2 per node (not serialized; used for Z and Jacobians),
// components stored [a11, a12, a21, a22]
struct MatrixField : detail::FieldBase<4> {
    using FieldBase::FieldBase;
    Mat2 get(std::size_t node) const {
        const double* p = at(node);
        Mat2 m;
        m << p[0], p[1], p[2], p[3];
        return m;
    }
    Mat2 get(int i, int j) const { return get(grid.index(i, j)); }
    void set(std::size_t node, const Mat2& m) {
        double* p = at(node);
        p[0] = m(0, 0);
        p[1] = m(0, 1);
        p[2] = m(1, 0);
        p[3] = m(1, 1);
    }
    void set(int i, int j, const Mat2& m) { set(grid.index(i, j), m); }
};

// closed-form SPD square root of a 2x2 matrix; throws EllipticityError if not SPD
Mat2 spd_sqrt(const Mat2& s);

// smallest/largest singular value and 2-norm condition number of a general 2x2
struct Sv2 {
    double smin, smax;
};
Sv2 singular_values(const Mat2& m);

// spherical/deviatoric split relative to a background tensor:
//   gamma = (trace/n) * gamma0 + dev,  trace = tr(gamma0^-1 gamma),
// so that tr(gamma0^-1 dev) = 0 pointwise.
struct Decomposition {
    ScalarField trace;
    SymMatrixField dev;
};
Decomposition decompose(const SymMatrixField& gamma, const SymMatrixField& gamma0);
SymMatrixField recompose(const Decomposition& d, const SymMatrixField& gamma0);

} // namespace pdrkit
