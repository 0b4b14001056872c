#include "pdrkit/elliptic.hpp"

#include <Eigen/IterativeLinearSolvers>

#include "pdrkit/errors.hpp"

namespace pdrkit {

SparseMat assemble_operator(const Grid2D& g, const SymMatrixField& T) {
    require_same_grid(g, T.grid, "assemble_operator");
    double hx = g.hx(), hy = g.hy();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(g.num_nodes() * 16);

    // Per cell, corner k contributes (1/4) Bk^T T(k) Bk, where Bk maps the
    // four cell values to the one-sided gradient at that corner. Divided by
    // the cell area this approximates -div(T grad .) at interior nodes.
    auto add_corner = [&](const std::size_t n[4], int corner, const Mat2& t) {
        // one-sided differences: gx uses the corner's horizontal edge,
        // gy the vertical one; entries of B are +-1/h on two nodes each
        // corner order within cell: 0=(i,j) 1=(i+1,j) 2=(i,j+1) 3=(i+1,j+1)
        static const int gx_pos[4] = {1, 1, 3, 3}, gx_neg[4] = {0, 0, 2, 2};
        static const int gy_pos[4] = {2, 3, 2, 3}, gy_neg[4] = {0, 1, 0, 1};
        double cx[4] = {0, 0, 0, 0}, cy[4] = {0, 0, 0, 0};
        cx[gx_pos[corner]] += 1.0 / hx;
        cx[gx_neg[corner]] -= 1.0 / hx;
        cy[gy_pos[corner]] += 1.0 / hy;
        cy[gy_neg[corner]] -= 1.0 / hy;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                double v = 0.25 * (cx[a] * (t(0, 0) * cx[b] + t(0, 1) * cy[b]) +
                                   cy[a] * (t(1, 0) * cx[b] + t(1, 1) * cy[b]));
                if (v != 0.0) trip.emplace_back(int(n[a]), int(n[b]), v);
            }
    };

    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i) {
            const std::size_t n[4] = {g.index(i, j), g.index(i + 1, j),
                                      g.index(i, j + 1), g.index(i + 1, j + 1)};
            for (int corner = 0; corner < 4; ++corner)
                add_corner(n, corner, T.get(n[corner]));
        }

    SparseMat A(long(g.num_nodes()), long(g.num_nodes()));
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

InteriorMap::InteriorMap(const Grid2D& g) : grid(g), node_to_interior(g.num_nodes(), -1) {
    for (int j = 1; j + 1 < g.ny; ++j)
        for (int i = 1; i + 1 < g.nx; ++i) {
            node_to_interior[g.index(i, j)] = int(interior_to_node.size());
            interior_to_node.push_back(g.index(i, j));
        }
}

EllipticOperator::EllipticOperator(const Grid2D& grid, const SymMatrixField& gamma0)
    : grid_(grid), gamma0_(gamma0), imap_(grid) {
    if (grid.nx < 4 || grid.ny < 4)
        throw GridError("elliptic solve needs at least 4 nodes per axis");
    auto ell = gamma0.ellipticity();
    if (!ell.uniformly_elliptic())
        throw EllipticityError("background tensor is not uniformly elliptic (lambda_min = " +
                               std::to_string(ell.lambda_min) + ")");

    SparseMat A = assemble_operator(grid, gamma0);
    for (std::size_t k = 0; k < grid.num_nodes(); ++k)
        if (imap_.node_to_interior[k] < 0) boundary_nodes_.push_back(k);
    std::vector<int> node_to_boundary(grid.num_nodes(), -1);
    for (std::size_t b = 0; b < boundary_nodes_.size(); ++b)
        node_to_boundary[boundary_nodes_[b]] = int(b);

    std::vector<Eigen::Triplet<double>> ii, ib;
    for (int col = 0; col < A.outerSize(); ++col)
        for (SparseMat::InnerIterator it(A, col); it; ++it) {
            int r = imap_.node_to_interior[it.row()];
            if (r < 0) continue;
            int c = imap_.node_to_interior[it.col()];
            if (c >= 0) ii.emplace_back(r, c, it.value());
            else ib.emplace_back(r, node_to_boundary[it.col()], it.value());
        }
    A_ii_.resize(long(imap_.size()), long(imap_.size()));
    A_ii_.setFromTriplets(ii.begin(), ii.end());
    A_ib_.resize(long(imap_.size()), long(boundary_nodes_.size()));
    A_ib_.setFromTriplets(ib.begin(), ib.end());

    ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SparseMat>>();
    ldlt_->compute(A_ii_);
    if (ldlt_->info() != Eigen::Success) {
        ldlt_.reset();
        use_iterative_ = true;
    }
}

Eigen::VectorXd EllipticOperator::solve_interior(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x;
    if (!use_iterative_) {
        x = ldlt_->solve(b);
    } else {
        Eigen::ConjugateGradient<SparseMat, Eigen::Lower | Eigen::Upper> cg(A_ii_);
        cg.setTolerance(1e-10);
        cg.setMaxIterations(20000);
        x = cg.solve(b);
        if (cg.info() != Eigen::Success)
            throw SolverError("elliptic solve: iterative fallback did not converge");
    }
    double bn = b.norm();
    last_residual_ = bn > 0 ? (A_ii_ * x - b).norm() / bn : 0.0;
    if (!x.allFinite()) throw SolverError("elliptic solve produced non-finite values");
    return x;
}

ScalarField EllipticOperator::solve_dirichlet(const ScalarField& g) const {
    require_same_grid(grid_, g.grid, "solve_dirichlet");
    Eigen::VectorXd gb(boundary_nodes_.size());
    for (std::size_t b = 0; b < boundary_nodes_.size(); ++b)
        gb[long(b)] = g[boundary_nodes_[b]];
    Eigen::VectorXd x = solve_interior(Eigen::VectorXd(-(A_ib_ * gb)));
    ScalarField u(grid_);
    for (std::size_t b = 0; b < boundary_nodes_.size(); ++b)
        u[boundary_nodes_[b]] = gb[long(b)];
    for (std::size_t k = 0; k < imap_.size(); ++k) u[imap_.interior_to_node[k]] = x[long(k)];
    return u;
}

ScalarField EllipticOperator::solve_zero_dirichlet(const ScalarField& rhs) const {
    require_same_grid(grid_, rhs.grid, "solve_zero_dirichlet");
    Eigen::VectorXd b(imap_.size());
    for (std::size_t k = 0; k < imap_.size(); ++k) b[long(k)] = rhs[imap_.interior_to_node[k]];
    Eigen::VectorXd x = solve_interior(b);
    ScalarField u(grid_);
    for (std::size_t k = 0; k < imap_.size(); ++k) u[imap_.interior_to_node[k]] = x[long(k)];
    return u;
}

ScalarField EllipticOperator::apply_divergence_form(const SymMatrixField& gamma,
                                                    const ScalarField& u) const {
    require_same_grid(grid_, gamma.grid, "apply_divergence_form");
    require_same_grid(grid_, u.grid, "apply_divergence_form");
    SparseMat A = assemble_operator(grid_, gamma);
    Eigen::Map<const Eigen::VectorXd> uv(u.data.data(), long(u.data.size()));
    Eigen::VectorXd w = A * uv; // approximates -div(gamma grad u) at interior nodes
    ScalarField out(grid_);
    for (std::size_t k = 0; k < imap_.size(); ++k) {
        std::size_t node = imap_.interior_to_node[k];
        out[node] = -w[long(node)];
    }
    return out;
}

ScalarField EllipticOperator::solve_perturbation(const SymMatrixField& gamma,
                                                 const ScalarField& u) const {
    return solve_zero_dirichlet(apply_divergence_form(gamma, u));
}

} // namespace pdrkit
