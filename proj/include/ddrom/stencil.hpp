#pragma once

#include "ddrom/grid.hpp"

#include <vector>

namespace ddrom {

/// Per-node finite-difference coefficients. Neumann walls fold the ghost
/// node back onto the first interior node, so a wall node's "missing"
/// neighbour index re-points inward and the centered first derivative
/// cancels to zero there.
struct NodeStencil {
    int c, xm, xp, ym, yp;  // node indices (0..nx*ny-1)
    // first derivative: Dx u = dx_m*u[xm] + dx_p*u[xp]
    double dx_m, dx_p;
    double dy_m, dy_p;
    // second derivative: Dxx u = lx_m*u[xm] + lx_c*u[c] + lx_p*u[xp]
    double lx_m, lx_c, lx_p;
    double ly_m, ly_c, ly_p;
};

/// One stencil entry per node, lexicographic x-fastest.
std::vector<NodeStencil> build_stencils(const Grid2D& grid);

}  // namespace ddrom
