#include "ddrom/stencil.hpp"

namespace ddrom {

std::vector<NodeStencil> build_stencils(const Grid2D& g) {
    std::vector<NodeStencil> out(static_cast<size_t>(g.num_nodes()));
    const double ihx2 = 1.0 / (2.0 * g.hx);
    const double ihy2 = 1.0 / (2.0 * g.hy);
    const double ihxx = 1.0 / (g.hx * g.hx);
    const double ihyy = 1.0 / (g.hy * g.hy);
    const bool periodic = (g.bc == BcKind::Periodic);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            NodeStencil s;
            s.c = g.node(i, j);
            // Neumann walls reflect the ghost onto the first interior node.
            int im = i - 1, ip = i + 1;
            int jm = j - 1, jp = j + 1;
            if (periodic) {
                im = (i - 1 + g.nx) % g.nx;
                ip = (i + 1) % g.nx;
                jm = (j - 1 + g.ny) % g.ny;
                jp = (j + 1) % g.ny;
            } else {
                if (im < 0) im = 1;
                if (ip >= g.nx) ip = g.nx - 2;
                if (jm < 0) jm = 1;
                if (jp >= g.ny) jp = g.ny - 2;
            }
            s.xm = g.node(im, j);
            s.xp = g.node(ip, j);
            s.ym = g.node(i, jm);
            s.yp = g.node(i, jp);
            s.dx_m = -ihx2; s.dx_p = ihx2;
            s.dy_m = -ihy2; s.dy_p = ihy2;
            s.lx_m = ihxx; s.lx_c = -2.0 * ihxx; s.lx_p = ihxx;
            s.ly_m = ihyy; s.ly_c = -2.0 * ihyy; s.ly_p = ihyy;
            out[static_cast<size_t>(s.c)] = s;
        }
    }
    return out;
}

}  // namespace ddrom
