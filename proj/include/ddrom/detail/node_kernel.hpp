#pragma once

#include "ddrom/stencil.hpp"

namespace ddrom::detail {

// Single-node Burgers right-hand side over caller-provided value arrays.
// Monolithic and subdomain paths both go through here so their residuals
// agree bitwise.
template <class GetU, class GetV>
inline void node_rhs(const NodeStencil& s, double nu, GetU&& u, GetV&& v,
                     double& fu, double& fv) {
    const double uc = u(s.c), vc = v(s.c);
    const double dux = s.dx_m * u(s.xm) + s.dx_p * u(s.xp);
    const double duy = s.dy_m * u(s.ym) + s.dy_p * u(s.yp);
    const double dvx = s.dx_m * v(s.xm) + s.dx_p * v(s.xp);
    const double dvy = s.dy_m * v(s.ym) + s.dy_p * v(s.yp);
    const double lap_u = s.lx_m * u(s.xm) + s.lx_c * uc + s.lx_p * u(s.xp) +
                         s.ly_m * u(s.ym) + s.ly_c * uc + s.ly_p * u(s.yp);
    const double lap_v = s.lx_m * v(s.xm) + s.lx_c * vc + s.lx_p * v(s.xp) +
                         s.ly_m * v(s.ym) + s.ly_c * vc + s.ly_p * v(s.yp);
    fu = -uc * dux - vc * duy + nu * lap_u;
    fv = -uc * dvx - vc * dvy + nu * lap_v;
}

// Backward Euler Jacobian entries for one node, emitted through a sink
// (row kind, col node, col is v component, value). Row kinds: 0 = u row,
// 1 = v row. Entries are raw dr/dx contributions; duplicates (Neumann
// reflection) must be summed by the sink.
template <class GetU, class GetV, class Sink>
inline void node_be_jacobian(const NodeStencil& s, double nu, double tau,
                             GetU&& u, GetV&& v, Sink&& emit) {
    const double uc = u(s.c), vc = v(s.c);
    const double dux = s.dx_m * u(s.xm) + s.dx_p * u(s.xp);
    const double duy = s.dy_m * u(s.ym) + s.dy_p * u(s.yp);
    const double dvx = s.dx_m * v(s.xm) + s.dx_p * v(s.xp);
    const double dvy = s.dy_m * v(s.ym) + s.dy_p * v(s.yp);
    const double lc = nu * (s.lx_c + s.ly_c);

    // u row: d r_u / d u_*
    emit(0, s.c, false, 1.0 - tau * (-dux + lc));
    emit(0, s.xm, false, -tau * (-uc * s.dx_m + nu * s.lx_m));
    emit(0, s.xp, false, -tau * (-uc * s.dx_p + nu * s.lx_p));
    emit(0, s.ym, false, -tau * (-vc * s.dy_m + nu * s.ly_m));
    emit(0, s.yp, false, -tau * (-vc * s.dy_p + nu * s.ly_p));
    // u row: d r_u / d v_c
    emit(0, s.c, true, -tau * (-duy));

    // v row: d r_v / d v_*
    emit(1, s.c, true, 1.0 - tau * (-dvy + lc));
    emit(1, s.xm, true, -tau * (-uc * s.dx_m + nu * s.lx_m));
    emit(1, s.xp, true, -tau * (-uc * s.dx_p + nu * s.lx_p));
    emit(1, s.ym, true, -tau * (-vc * s.dy_m + nu * s.ly_m));
    emit(1, s.yp, true, -tau * (-vc * s.dy_p + nu * s.ly_p));
    // v row: d r_v / d u_c
    emit(1, s.c, false, -tau * (-dvx));
}

}  // namespace ddrom::detail
