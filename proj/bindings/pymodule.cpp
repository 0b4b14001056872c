// pybind11 face of the toolkit: numpy arrays in, numpy arrays out.
// Array layout mirrors the field files: shape (ny, nx) for scalars and
// (ny, nx, ncomp) for multi-component fields, C order, so arr[j, i]
// addresses grid node (i, j).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pdrkit/errors.hpp"
#include "pdrkit/field_io.hpp"
#include "pdrkit/invert.hpp"
#include "pdrkit/measure.hpp"
#include "pdrkit/microlocal.hpp"
#include "pdrkit/scenario.hpp"
#include "pdrkit/stencils.hpp"

namespace py = pybind11;
using namespace pdrkit;

namespace {

using Arr = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Extent = std::tuple<double, double, double, double>;

Grid2D grid_from(const Arr& a, const Extent& ext) {
    if (a.ndim() < 2) throw GridError("field array needs shape (ny, nx, ...)");
    return Grid2D(int(a.shape(1)), int(a.shape(0)), std::get<0>(ext),
                  std::get<1>(ext), std::get<2>(ext), std::get<3>(ext));
}

template <typename F>
F field_from(const Arr& a, const Grid2D& grid, int ncomp, const char* what) {
    const bool flat = ncomp == 1 && a.ndim() == 2;
    if (!(flat || (a.ndim() == 3 && a.shape(2) == ncomp)))
        throw ComponentMismatchError(std::string(what) + ": expected " +
                                     std::to_string(ncomp) + " components");
    if (a.shape(0) != grid.ny || a.shape(1) != grid.nx)
        throw GridError(std::string(what) + ": array shape does not match grid");
    F f(grid);
    std::copy(a.data(), a.data() + f.data.size(), f.data.begin());
    return f;
}

template <typename F>
py::array to_array(const F& f, int ncomp) {
    py::array_t<double> a(ncomp == 1
                              ? std::vector<py::ssize_t>{f.grid.ny, f.grid.nx}
                              : std::vector<py::ssize_t>{f.grid.ny, f.grid.nx,
                                                         ncomp});
    std::copy(f.data.begin(), f.data.end(), a.mutable_data());
    return a;
}

Mat2 qmat(const std::array<double, 3>& q) {
    Mat2 m;
    m << q[0], q[1], q[1], q[2];
    return m;
}

SolutionSet solution_set(const Grid2D& grid, const SymMatrixField& gamma0,
                         const std::vector<ScalarField>& us) {
    SolutionSet set;
    set.grid = grid;
    set.gamma0 = gamma0;
    for (const auto& u : us) {
        Solution s;
        s.u = u;
        s.grad = gradient(u);
        s.hess = hessian(u);
        set.sols.push_back(std::move(s));
    }
    return set;
}

py::dict synthesize_py(const Arr& gamma0_a, const Arr& gamma_a,
                       const std::array<double, 3>& q, const Extent& ext) {
    const Grid2D grid = grid_from(gamma0_a, ext);
    const SymMatrixField gamma0 =
        field_from<SymMatrixField>(gamma0_a, grid, 3, "gamma0");
    const SymMatrixField gamma =
        field_from<SymMatrixField>(gamma_a, grid, 3, "gamma");

    const EllipticOperator op(grid, gamma0);
    const SolutionSet set =
        synthesize_solutions(op, quadratic_boundary(grid, qmat(q)));
    const MeasurementSet mset = synthesize_measurements(op, set, gamma);

    py::array_t<double> u({grid.ny, grid.nx, 3});
    py::array_t<double> H({grid.ny, grid.nx, 6});
    py::array_t<double> dH({grid.ny, grid.nx, 5});
    auto uu = u.mutable_unchecked<3>();
    auto hh = H.mutable_unchecked<3>();
    auto dd = dH.mutable_unchecked<3>();
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const std::size_t k = grid.index(i, j);
            for (int s = 0; s < 3; ++s) uu(j, i, s) = set.sols[s].u[k];
            for (int s = 0; s < 6; ++s) hh(j, i, s) = mset.H[s][k];
            for (int s = 0; s < 5; ++s) dd(j, i, s) = mset.dH[s][k];
        }
    py::dict out;
    out["u"] = u;
    out["H"] = H;
    out["dH"] = dH;
    return out;
}

py::dict reconstruct_py(const Arr& gamma0_a, const Arr& u_a, const Arr& H_a,
                        const Arr& dH_a, const Extent& ext, double c0,
                        double sigma_min) {
    const Grid2D grid = grid_from(gamma0_a, ext);
    const SymMatrixField gamma0 =
        field_from<SymMatrixField>(gamma0_a, grid, 3, "gamma0");
    if (u_a.ndim() != 3 || u_a.shape(2) != 3)
        throw ComponentMismatchError("u: expected shape (ny, nx, 3)");
    if (H_a.ndim() != 3 || H_a.shape(2) != 6)
        throw ComponentMismatchError("H: expected shape (ny, nx, 6)");
    if (dH_a.ndim() != 3 || dH_a.shape(2) != 5)
        throw ComponentMismatchError("dH: expected shape (ny, nx, 5)");

    std::vector<ScalarField> us(3, ScalarField(grid));
    MeasurementSet mset;
    mset.grid = grid;
    mset.m = 3;
    mset.H.assign(6, ScalarField(grid));
    mset.dH.assign(5, ScalarField(grid));
    auto uu = u_a.unchecked<3>();
    auto hh = H_a.unchecked<3>();
    auto dd = dH_a.unchecked<3>();
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const std::size_t k = grid.index(i, j);
            for (int s = 0; s < 3; ++s) us[s][k] = uu(j, i, s);
            for (int s = 0; s < 6; ++s) mset.H[s][k] = hh(j, i, s);
            for (int s = 0; s < 5; ++s) mset.dH[s][k] = dd(j, i, s);
        }

    ReconstructOptions opt;
    opt.c0 = c0;
    opt.sigma_min = sigma_min;
    const InversionResult res =
        reconstruct(solution_set(grid, gamma0, us), mset, opt);

    py::array_t<double> v({grid.ny, grid.nx, 2});
    auto vv = v.mutable_unchecked<3>();
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            for (int s = 0; s < 2; ++s)
                vv(j, i, s) = res.v[s][grid.index(i, j)];

    py::dict out;
    out["gamma_rec"] = to_array(res.gamma_rec, 3);
    out["trace_rec"] = to_array(res.trace_rec, 1);
    out["v"] = v;
    py::dict diag;
    for (const auto& [k, val] : res.diagnostics) diag[py::str(k)] = val;
    out["diagnostics"] = diag;
    return out;
}

py::array solve_dirichlet_py(const Arr& gamma0_a, const Arr& g_a,
                             const Extent& ext) {
    const Grid2D grid = grid_from(gamma0_a, ext);
    const SymMatrixField gamma0 =
        field_from<SymMatrixField>(gamma0_a, grid, 3, "gamma0");
    const ScalarField g = field_from<ScalarField>(g_a, grid, 1, "g");
    const EllipticOperator op(grid, gamma0);
    return to_array(op.solve_dirichlet(g), 1);
}

py::list battery_py(std::uint64_t seed, int samples) {
    py::list out;
    for (const auto& c : run_identity_battery(seed, samples)) {
        py::dict d;
        d["name"] = c.name;
        d["samples"] = c.samples;
        d["max_residual"] = c.max_residual;
        d["threshold"] = c.threshold;
        d["pass"] = c.pass;
        out.append(d);
    }
    return out;
}

py::tuple read_field_py(const std::string& path) {
    const AnyField any = read_field(path);
    py::array arr;
    const Grid2D* grid = nullptr;
    std::string kind;
    if (std::holds_alternative<ScalarField>(any)) {
        const auto& f = std::get<ScalarField>(any);
        arr = to_array(f, 1);
        grid = &f.grid;
        kind = "scalar";
    } else if (std::holds_alternative<VectorField>(any)) {
        const auto& f = std::get<VectorField>(any);
        arr = to_array(f, 2);
        grid = &f.grid;
        kind = "vector";
    } else {
        const auto& f = std::get<SymMatrixField>(any);
        arr = to_array(f, 3);
        grid = &f.grid;
        kind = "symmat";
    }
    return py::make_tuple(arr, py::make_tuple(grid->x0, grid->y0, grid->Lx,
                                              grid->Ly),
                          kind);
}

void write_field_py(const std::string& path, const Arr& a, const Extent& ext) {
    const Grid2D grid = grid_from(a, ext);
    const int ncomp = a.ndim() == 2 ? 1 : int(a.shape(2));
    if (ncomp == 1)
        write_field(path, field_from<ScalarField>(a, grid, 1, "field"));
    else if (ncomp == 2)
        write_field(path, field_from<VectorField>(a, grid, 2, "field"));
    else if (ncomp == 3)
        write_field(path, field_from<SymMatrixField>(a, grid, 3, "field"));
    else
        throw ComponentMismatchError("field arrays carry 1, 2 or 3 components");
}

} // namespace

PYBIND11_MODULE(_pdrkit, m) {
    m.doc() = "linearized power-density reconstruction on 2D grids";
    const Extent unit{0.0, 0.0, 1.0, 1.0};

    py::register_exception<Error>(m, "PdrkitError");

    m.def("solve_dirichlet", &solve_dirichlet_py, py::arg("gamma0"),
          py::arg("g"), py::arg("extent") = unit,
          "solve -div(gamma0 grad u) = 0 with Dirichlet data g");
    m.def("synthesize", &synthesize_py, py::arg("gamma0"), py::arg("gamma"),
          py::arg("q"), py::arg("extent") = unit,
          "background solutions u, power densities H (pairs 11,12,13,22,23,33)"
          " and linearized densities dH (pairs 11,12,13,22,23)");
    m.def("reconstruct", &reconstruct_py, py::arg("gamma0"), py::arg("u"),
          py::arg("H"), py::arg("dH"), py::arg("extent") = unit,
          py::arg("c0") = 1e-6, py::arg("sigma_min") = 1e-6,
          "recover gamma and its weighted trace from measurements");
    m.def("identity_battery", &battery_py, py::arg("seed") = 0,
          py::arg("samples") = 1000,
          "randomized pointwise symbol-identity checks");
    m.def("read_field", &read_field_py, py::arg("path"),
          "returns (array, extent, kind)");
    m.def("write_field", &write_field_py, py::arg("path"), py::arg("array"),
          py::arg("extent") = unit);
}
