#pragma once

#include <Eigen/Sparse>
#include <memory>

#include "pdrkit/field.hpp"

namespace pdrkit {

using SparseMat = Eigen::SparseMatrix<double>;

// Node-indexed assembly of the divergence-form operator  u -> -div(T grad u)
// as a 9-point stencil. The discretization is the cell-corner energy scheme:
// per cell, the energy integrand grad u . T grad u is sampled at the four
// corners with one-sided in-cell differences and trapezoid weights, and the
// operator is the (scaled) Hessian of that quadratic energy. This keeps the
// assembled matrix symmetric for any symmetric tensor and reduces to
// arithmetic-average edge fluxes when T is diagonal.
//
// Rows/columns run over all nodes; only interior rows are consistent with the
// PDE (boundary rows exist so Dirichlet data can be folded into the RHS).
SparseMat assemble_operator(const Grid2D& grid, const SymMatrixField& T);

// interior <-> full-grid bookkeeping for Dirichlet problems
struct InteriorMap {
    explicit InteriorMap(const Grid2D& grid);
    Grid2D grid;
    std::vector<int> node_to_interior; // -1 on boundary nodes
    std::vector<std::size_t> interior_to_node;
    std::size_t size() const { return interior_to_node.size(); }
};

// Dirichlet solver for a fixed uniformly elliptic background tensor.
// Factors the interior block once (direct LDLT; conjugate-gradient fallback
// at relative tolerance 1e-10 if the factorization fails).
class EllipticOperator {
  public:
    EllipticOperator(const Grid2D& grid, const SymMatrixField& gamma0);

    const Grid2D& grid() const { return grid_; }
    const SymMatrixField& gamma0() const { return gamma0_; }

    // -div(gamma0 grad u) = 0, u = g on the boundary (g sampled at boundary
    // nodes of the given field; interior values of g are ignored)
    ScalarField solve_dirichlet(const ScalarField& g) const;

    // -div(gamma0 grad u) = rhs (interior nodes), u = 0 on the boundary
    ScalarField solve_zero_dirichlet(const ScalarField& rhs) const;

    // discrete div(gamma grad u) at interior nodes (zero on the boundary),
    // assembled with the same stencil as the operator so that
    // solve_perturbation(gamma0, u) vanishes identically
    ScalarField apply_divergence_form(const SymMatrixField& gamma,
                                      const ScalarField& u) const;

    // -div(gamma0 grad v) = div(gamma grad u), v = 0 on the boundary
    ScalarField solve_perturbation(const SymMatrixField& gamma,
                                   const ScalarField& u) const;

    // last solve's relative residual (diagnostic)
    double last_residual() const { return last_residual_; }

    const SparseMat& interior_matrix() const { return A_ii_; }
    const InteriorMap& interior_map() const { return imap_; }

  private:
    Eigen::VectorXd solve_interior(const Eigen::VectorXd& b) const;

    Grid2D grid_;
    SymMatrixField gamma0_;
    InteriorMap imap_;
    SparseMat A_ii_, A_ib_; // interior x interior, interior x boundary
    std::vector<std::size_t> boundary_nodes_;
    std::unique_ptr<Eigen::SimplicialLDLT<SparseMat>> ldlt_;
    bool use_iterative_ = false;
    mutable double last_residual_ = 0.0;
};

} // namespace pdrkit
