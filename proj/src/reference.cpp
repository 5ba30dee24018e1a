#include "ddrom/reference.hpp"

#include <Eigen/SparseLU>
#include <stdexcept>

namespace ddrom::reference {

namespace {

// Neighbour node index with the grid's boundary treatment: periodic wrap
// or Neumann ghost reflection onto the first interior node.
int nbr(int i, int d, int n, BcKind bc) {
    int j = i + d;
    if (bc == BcKind::Periodic) return (j + n) % n;
    if (j < 0) return 1;
    if (j >= n) return n - 2;
    return j;
}

}  // namespace

Vec serial_rhs(const Vec& state, const Grid2D& g, double nu) {
    if (state.size() != g.num_dofs())
        throw std::invalid_argument("serial_rhs: dimension mismatch");
    const int n = g.num_nodes();
    Vec out(2 * n);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int c = j * g.nx + i;
            const int xm = j * g.nx + nbr(i, -1, g.nx, g.bc);
            const int xp = j * g.nx + nbr(i, +1, g.nx, g.bc);
            const int ym = nbr(j, -1, g.ny, g.bc) * g.nx + i;
            const int yp = nbr(j, +1, g.ny, g.bc) * g.nx + i;
            const double u = state(c), v = state(n + c);
            const double dxu = (state(xp) - state(xm)) / (2.0 * g.hx);
            const double dyu = (state(yp) - state(ym)) / (2.0 * g.hy);
            const double dxv = (state(n + xp) - state(n + xm)) / (2.0 * g.hx);
            const double dyv = (state(n + yp) - state(n + ym)) / (2.0 * g.hy);
            const double lap_u =
                (state(xm) - 2.0 * state(c) + state(xp)) / (g.hx * g.hx) +
                (state(ym) - 2.0 * state(c) + state(yp)) / (g.hy * g.hy);
            const double lap_v =
                (state(n + xm) - 2.0 * state(n + c) + state(n + xp)) / (g.hx * g.hx) +
                (state(n + ym) - 2.0 * state(n + c) + state(n + yp)) / (g.hy * g.hy);
            out(c) = -u * dxu - v * dyu + nu * lap_u;
            out(n + c) = -u * dxv - v * dyv + nu * lap_v;
        }
    return out;
}

Vec serial_be_residual(const Vec& x_k, const Vec& x_prev,
                       const BurgersParams& p, const Grid2D& g) {
    return x_k - x_prev - p.tau * serial_rhs(x_k, g, p.nu);
}

Mat dense_be_jacobian(const Vec& x_k, const BurgersParams& p,
                      const Grid2D& g) {
    const int n = g.num_nodes();
    Mat J = Mat::Identity(2 * n, 2 * n);
    const double tau = p.tau, nu = p.nu;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int c = j * g.nx + i;
            const int xm = j * g.nx + nbr(i, -1, g.nx, g.bc);
            const int xp = j * g.nx + nbr(i, +1, g.nx, g.bc);
            const int ym = nbr(j, -1, g.ny, g.bc) * g.nx + i;
            const int yp = nbr(j, +1, g.ny, g.bc) * g.nx + i;
            const double u = x_k(c), v = x_k(n + c);
            const double cx = 1.0 / (2.0 * g.hx), cy = 1.0 / (2.0 * g.hy);
            const double lx = 1.0 / (g.hx * g.hx), ly = 1.0 / (g.hy * g.hy);
            const double dxu = (x_k(xp) - x_k(xm)) * cx;
            const double dyu = (x_k(yp) - x_k(ym)) * cy;
            const double dxv = (x_k(n + xp) - x_k(n + xm)) * cx;
            const double dyv = (x_k(n + yp) - x_k(n + ym)) * cy;

            // u-row: r_u = u - prev - tau(-u dxu - v dyu + nu lap u)
            J(c, c) += -tau * (-dxu - 2.0 * nu * (lx + ly));
            J(c, xm) += -tau * (u * cx + nu * lx);
            J(c, xp) += -tau * (-u * cx + nu * lx);
            J(c, ym) += -tau * (v * cy + nu * ly);
            J(c, yp) += -tau * (-v * cy + nu * ly);
            J(c, n + c) += -tau * (-dyu);
            // v-row: r_v = v - prev - tau(-u dxv - v dyv + nu lap v)
            J(n + c, n + c) += -tau * (-dyv - 2.0 * nu * (lx + ly));
            J(n + c, n + xm) += -tau * (u * cx + nu * lx);
            J(n + c, n + xp) += -tau * (-u * cx + nu * lx);
            J(n + c, n + ym) += -tau * (v * cy + nu * ly);
            J(n + c, n + yp) += -tau * (-v * cy + nu * ly);
            J(n + c, c) += -tau * (-dxv);
        }
    return J;
}

std::vector<Vec> dense_newton_solve(const BurgersParams& p, const Grid2D& g,
                                    const Vec& x0, int steps) {
    std::vector<Vec> traj{x0};
    const double tol = 1e-12 * std::sqrt(static_cast<double>(g.num_dofs()));
    Vec x = x0;
    for (int k = 0; k < steps; ++k) {
        const Vec prev = x;
        for (int it = 0; it < 40; ++it) {
            const Vec r = serial_be_residual(x, prev, p, g);
            if (r.norm() <= tol) break;
            const Mat J = dense_be_jacobian(x, p, g);
            // The assembly is the oracle; a sparse factorization of the
            // dense entries just keeps big instances affordable.
            SpMat Js = J.sparseView();
            Eigen::SparseLU<SpMat> lu(Js);
            if (lu.info() != Eigen::Success)
                throw std::runtime_error("dense_newton_solve: factorization failed");
            x -= lu.solve(r);
        }
        if (serial_be_residual(x, prev, p, g).norm() > tol)
            throw std::runtime_error("dense_newton_solve: step did not converge");
        traj.push_back(x);
    }
    return traj;
}

std::vector<std::set<int>> node_sharing_sets(const Grid2D& g,
                                             const SubdomainLayout& layout) {
    const int n = g.num_nodes();
    std::vector<std::set<int>> sharing(static_cast<size_t>(n));
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int c = j * g.nx + i;
            const int owner = layout.node_owner[static_cast<size_t>(c)];
            const int refs[5] = {
                c,
                j * g.nx + nbr(i, -1, g.nx, g.bc),
                j * g.nx + nbr(i, +1, g.nx, g.bc),
                nbr(j, -1, g.ny, g.bc) * g.nx + i,
                nbr(j, +1, g.ny, g.bc) * g.nx + i,
            };
            for (int m : refs) sharing[static_cast<size_t>(m)].insert(owner);
        }
    return sharing;
}

}  // namespace ddrom::reference
