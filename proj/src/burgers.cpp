#include "ddrom/burgers.hpp"

#include "ddrom/detail/node_kernel.hpp"
#include "ddrom/partition.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <numbers>

namespace ddrom {

Vec initial_condition(const Grid2D& grid, const SubdomainLayout& layout,
                      const Vec& mu) {
    if (mu.size() != layout.n_omega)
        throw std::invalid_argument("initial_condition: mu length mismatch");
    const int nn = grid.num_nodes();
    Vec x = Vec::Zero(grid.num_dofs());
    const double two_pi = 2.0 * std::numbers::pi;
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const int n = grid.node(i, j);
            const double amp = mu[layout.node_owner[static_cast<size_t>(n)]];
            const double val = std::abs(amp * std::sin(two_pi * grid.x_of(i)) *
                                        std::sin(two_pi * grid.y_of(j)));
            x[n] = val;
            x[nn + n] = val;
        }
    }
    return x;
}

void rhs_into(const Vec& state, const std::vector<NodeStencil>& st,
              const Grid2D& grid, double nu, Vec& out) {
    const int nn = grid.num_nodes();
    const double* u = state.data();
    const double* v = state.data() + nn;
    double* fu = out.data();
    double* fv = out.data() + nn;
#pragma omp parallel for schedule(static)
    for (int n = 0; n < nn; ++n) {
        detail::node_rhs(
            st[static_cast<size_t>(n)], nu, [&](int k) { return u[k]; },
            [&](int k) { return v[k]; }, fu[n], fv[n]);
    }
}

Vec rhs(const Vec& state, const Grid2D& grid, double nu) {
    if (state.size() != grid.num_dofs())
        throw std::invalid_argument("rhs: state dimension mismatch");
    auto st = build_stencils(grid);
    Vec out(grid.num_dofs());
    rhs_into(state, st, grid, nu, out);
    return out;
}

Vec be_residual(const Vec& x_k, const Vec& x_prev, const BurgersParams& p,
                const Grid2D& grid) {
    if (x_k.size() != grid.num_dofs() || x_prev.size() != grid.num_dofs())
        throw std::invalid_argument("be_residual: dimension mismatch");
    Vec f = rhs(x_k, grid, p.nu);
    return x_k - x_prev - p.tau * f;
}

SpMat be_jacobian(const Vec& x_k, const BurgersParams& p, const Grid2D& grid) {
    if (x_k.size() != grid.num_dofs())
        throw std::invalid_argument("be_jacobian: dimension mismatch");
    const int nn = grid.num_nodes();
    const int nd = grid.num_dofs();
    auto st = build_stencils(grid);
    const double* u = x_k.data();
    const double* v = x_k.data() + nn;
    std::vector<Triplet> trips;
    trips.reserve(static_cast<size_t>(nn) * 12);
    for (int n = 0; n < nn; ++n) {
        detail::node_be_jacobian(
            st[static_cast<size_t>(n)], p.nu, p.tau,
            [&](int k) { return u[k]; }, [&](int k) { return v[k]; },
            [&](int row_kind, int col_node, bool col_v, double val) {
                const int row = (row_kind == 0) ? n : nn + n;
                const int col = col_v ? nn + col_node : col_node;
                trips.emplace_back(row, col, val);
            });
    }
    SpMat J(nd, nd);
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
}

MonolithicSolveResult solve_monolithic(const BurgersParams& p,
                                       const Grid2D& grid, const Vec& x0) {
    if (x0.size() != grid.num_dofs())
        throw std::invalid_argument("solve_monolithic: x0 dimension mismatch");
    const int nd = grid.num_dofs();
    const double tol = 1e-10 * std::sqrt(static_cast<double>(nd));
    auto st = build_stencils(grid);

    MonolithicSolveResult res;
    res.trajectory.reserve(static_cast<size_t>(p.Nt) + 1);
    res.trajectory.push_back(x0);

    Eigen::SparseLU<SpMat> lu;
    bool analyzed = false;
    Vec f(nd);
    for (int k = 1; k <= p.Nt; ++k) {
        const Vec& prev = res.trajectory.back();
        Vec x = prev;  // warm start
        NewtonReport rep;
        // One extra correction after crossing tol: quadratic convergence
        // makes the stored state essentially the exact BE solution, so the
        // trajectories can serve as ground truth for ROM errors.
        bool polish = false;
        for (int it = 0; it < 25; ++it) {
            rhs_into(x, st, grid, p.nu, f);
            Vec r = x - prev - p.tau * f;
            rep.final_residual_norm = r.norm();
            rep.iterations = it;
            if (rep.final_residual_norm <= tol) {
                rep.converged = true;
                if (polish) break;
                polish = true;
            }
            SpMat J = be_jacobian(x, p, grid);
            if (!analyzed) {
                lu.analyzePattern(J);
                analyzed = true;
            }
            lu.factorize(J);
            if (lu.info() != Eigen::Success)
                throw std::runtime_error("solve_monolithic: singular Jacobian");
            const Vec dx = lu.solve(r);
            // Backtracking on ||r||: full Newton steps can overshoot on
            // sharp-gradient states; accept the first damped step with
            // sufficient decrease.
            double t = 1.0;
            Vec x_try = x - dx;
            for (int ls = 0; ls < 30; ++ls) {
                rhs_into(x_try, st, grid, p.nu, f);
                const double r_try = (x_try - prev - p.tau * f).norm();
                if (r_try <= (1.0 - 1e-4 * t) * rep.final_residual_norm) break;
                t *= 0.5;
                x_try = x - t * dx;
            }
            x = std::move(x_try);
        }
        if (!rep.converged) res.all_converged = false;
        res.steps.push_back(rep);
        res.trajectory.push_back(std::move(x));
    }
    return res;
}

}  // namespace ddrom
