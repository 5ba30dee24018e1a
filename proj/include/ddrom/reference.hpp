#pragma once

#include "ddrom/grid.hpp"
#include "ddrom/partition.hpp"

#include <set>
#include <vector>

namespace ddrom::reference {

/// Serial reference implementations written with direct index arithmetic,
/// independent of the stencil tables and node kernels used by the
/// production paths. Kept for testing (oracles) and as the baseline of
/// the kernel benchmark.

Vec serial_rhs(const Vec& state, const Grid2D& grid, double nu);

Vec serial_be_residual(const Vec& x_k, const Vec& x_prev,
                       const BurgersParams& p, const Grid2D& grid);

/// Dense Backward Euler Jacobian assembled entry-by-entry.
Mat dense_be_jacobian(const Vec& x_k, const BurgersParams& p,
                      const Grid2D& grid);

/// Newton time stepping built on the dense reference Jacobian.
std::vector<Vec> dense_newton_solve(const BurgersParams& p, const Grid2D& grid,
                                    const Vec& x0, int steps);

/// For every node, the set of subdomains whose residual stencils reference
/// it (brute-force scan of the monolithic sparsity pattern).
std::vector<std::set<int>> node_sharing_sets(const Grid2D& grid,
                                             const SubdomainLayout& layout);

/// Central finite-difference Jacobian of a generic vector function.
template <class F>
Mat fd_jacobian(F&& f, const Vec& x, double eps = 1e-6) {
    const Vec f0 = f(x);
    Mat J(f0.size(), x.size());
    Vec xp = x;
    for (Eigen::Index c = 0; c < x.size(); ++c) {
        xp(c) = x(c) + eps;
        const Vec fp = f(xp);
        xp(c) = x(c) - eps;
        const Vec fm = f(xp);
        xp(c) = x(c);
        J.col(c) = (fp - fm) / (2.0 * eps);
    }
    return J;
}

}  // namespace ddrom::reference
