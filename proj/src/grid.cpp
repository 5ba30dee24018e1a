#include "ddrom/grid.hpp"

#include <cmath>

namespace ddrom {

Grid2D build_grid(int nx, int ny, double x0, double x1, double y0, double y1,
                  BcKind bc) {
    if (nx < 3 || ny < 3)
        throw std::invalid_argument("build_grid: nx and ny must be >= 3");
    if (!(x1 > x0) || !(y1 > y0))
        throw std::invalid_argument("build_grid: degenerate extents");
    Grid2D g;
    g.nx = nx;
    g.ny = ny;
    g.x0 = x0; g.x1 = x1; g.y0 = y0; g.y1 = y1;
    g.bc = bc;
    if (bc == BcKind::Periodic) {
        g.hx = (x1 - x0) / nx;
        g.hy = (y1 - y0) / ny;
    } else {
        g.hx = (x1 - x0) / (nx - 1);
        g.hy = (y1 - y0) / (ny - 1);
    }
    return g;
}

BurgersParams make_params(double nu, double tau, double T) {
    if (nu <= 0.0 || tau <= 0.0 || T <= 0.0)
        throw std::invalid_argument("make_params: nu, tau, T must be positive");
    BurgersParams p;
    p.nu = nu;
    p.tau = tau;
    p.T = T;
    double nt = T / tau;
    p.Nt = static_cast<int>(std::lround(nt));
    if (std::abs(p.Nt * tau - T) > 1e-12 * T)
        throw std::invalid_argument("make_params: T must be an integer multiple of tau");
    return p;
}

}  // namespace ddrom
