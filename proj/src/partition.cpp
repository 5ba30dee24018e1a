#include "ddrom/partition.hpp"

#include "ddrom/detail/node_kernel.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>

namespace ddrom {

SubdomainLayout partition(const Grid2D& grid, int blocks_x, int blocks_y) {
    if (blocks_x < 1 || blocks_y < 1)
        throw std::invalid_argument("partition: block counts must be >= 1");
    if (grid.nx % blocks_x != 0 || grid.ny % blocks_y != 0)
        throw std::invalid_argument("partition: grid not divisible by block counts");
    SubdomainLayout L;
    L.blocks_x = blocks_x;
    L.blocks_y = blocks_y;
    L.n_omega = blocks_x * blocks_y;
    L.block_nx = grid.nx / blocks_x;
    L.block_ny = grid.ny / blocks_y;
    L.node_owner.resize(static_cast<size_t>(grid.num_nodes()));
    L.residual_rows.assign(static_cast<size_t>(L.n_omega), {});
    const int nn = grid.num_nodes();
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const int owner = L.owner_of(i / L.block_nx, j / L.block_ny);
            L.node_owner[static_cast<size_t>(grid.node(i, j))] = owner;
        }
    }
    // Residual rows per subdomain: u rows of owned nodes ascending, then v rows.
    for (int n = 0; n < nn; ++n)
        L.residual_rows[static_cast<size_t>(L.node_owner[static_cast<size_t>(n)])].push_back(n);
    for (auto& rows : L.residual_rows) {
        const size_t nu_rows = rows.size();
        for (size_t k = 0; k < nu_rows; ++k) rows.push_back(rows[k] + nn);
    }
    return L;
}

namespace {

// Sharing set of a node: its owner plus the owners of every node whose
// residual stencil references it (reach 1 for the 5-point scheme).
std::vector<std::set<int>> node_sharing_sets(const SubdomainLayout& L,
                                             const Grid2D& g) {
    auto st = build_stencils(g);
    const int nn = g.num_nodes();
    std::vector<std::set<int>> sharing(static_cast<size_t>(nn));
    for (int n = 0; n < nn; ++n) {
        const int owner = L.node_owner[static_cast<size_t>(n)];
        const auto& s = st[static_cast<size_t>(n)];
        sharing[static_cast<size_t>(n)].insert(owner);
        for (int nb : {s.xm, s.xp, s.ym, s.yp})
            sharing[static_cast<size_t>(nb)].insert(owner);
    }
    return sharing;
}

}  // namespace

StateMaps classify_states(const SubdomainLayout& L, const Grid2D& g) {
    const int nn = g.num_nodes();
    const bool periodic = (g.bc == BcKind::Periodic);
    auto sharing = node_sharing_sets(L, g);

    StateMaps out;
    auto& ports = out.ports.ports;

    std::vector<bool> in_edge_port(static_cast<size_t>(nn), false);

    // Vertical cuts between block columns c and (c+1) mod blocks_x.
    const int cuts_x = (L.blocks_x >= 2) ? (periodic ? L.blocks_x : L.blocks_x - 1) : 0;
    const int cuts_y = (L.blocks_y >= 2) ? (periodic ? L.blocks_y : L.blocks_y - 1) : 0;
    // End rows/cols of a cut segment are excluded from edge ports whenever
    // cuts of the other orientation exist anywhere in the layout; this keeps
    // edge-port dimensions identical across training and deployment layouts.
    const bool trim_v = L.blocks_y >= 2;
    const bool trim_h = L.blocks_x >= 2;

    for (int c = 0; c < cuts_x; ++c) {
        const int iL = (c + 1) * L.block_nx - 1;
        const int iR = ((c + 1) * L.block_nx) % g.nx;
        for (int r = 0; r < L.blocks_y; ++r) {
            const int j_lo = r * L.block_ny + (trim_v ? 1 : 0);
            const int j_hi = (r + 1) * L.block_ny - (trim_v ? 1 : 0);
            Port p;
            p.kind = PortKind::VerticalEdge;
            for (int side = 0; side < 2; ++side) {
                const int i = (side == 0) ? iL : iR;
                for (int j = j_lo; j < j_hi; ++j) p.dofs.push_back(g.u_dof(i, j));
            }
            for (int side = 0; side < 2; ++side) {
                const int i = (side == 0) ? iL : iR;
                for (int j = j_lo; j < j_hi; ++j) p.dofs.push_back(g.v_dof(i, j));
            }
            const int sL = L.owner_of(c, r);
            const int sR = L.owner_of((c + 1) % L.blocks_x, r);
            p.sharing = {std::min(sL, sR), std::max(sL, sR)};
            for (int d : p.dofs) in_edge_port[static_cast<size_t>(d % nn)] = true;
            ports.push_back(std::move(p));
            ++out.ports.num_vertical;
        }
    }
    for (int c = 0; c < cuts_y; ++c) {
        const int jB = (c + 1) * L.block_ny - 1;
        const int jT = ((c + 1) * L.block_ny) % g.ny;
        for (int r = 0; r < L.blocks_x; ++r) {
            const int i_lo = r * L.block_nx + (trim_h ? 1 : 0);
            const int i_hi = (r + 1) * L.block_nx - (trim_h ? 1 : 0);
            Port p;
            p.kind = PortKind::HorizontalEdge;
            for (int side = 0; side < 2; ++side) {
                const int j = (side == 0) ? jB : jT;
                for (int i = i_lo; i < i_hi; ++i) p.dofs.push_back(g.u_dof(i, j));
            }
            for (int side = 0; side < 2; ++side) {
                const int j = (side == 0) ? jB : jT;
                for (int i = i_lo; i < i_hi; ++i) p.dofs.push_back(g.v_dof(i, j));
            }
            const int sB = L.owner_of(r, c);
            const int sT = L.owner_of(r, (c + 1) % L.blocks_y);
            p.sharing = {std::min(sB, sT), std::max(sB, sT)};
            for (int d : p.dofs) in_edge_port[static_cast<size_t>(d % nn)] = true;
            ports.push_back(std::move(p));
            ++out.ports.num_horizontal;
        }
    }

    // Remaining interface nodes become tiny full-order ports, one node each:
    // true corners (shared by >= 3 subdomains) and, under wall-bounded
    // layouts, cut ends touching a domain boundary (shared by 2).
    for (int n = 0; n < nn; ++n) {
        if (in_edge_port[static_cast<size_t>(n)]) continue;
        if (sharing[static_cast<size_t>(n)].size() < 2) continue;
        Port p;
        p.kind = PortKind::Corner;
        p.dofs = {n, nn + n};
        p.sharing.assign(sharing[static_cast<size_t>(n)].begin(),
                         sharing[static_cast<size_t>(n)].end());
        ports.push_back(std::move(p));
        ++out.ports.num_corner;
    }

    // Structural checks: disjoint ports covering exactly the interface set,
    // uniform edge-port dimensions per orientation.
    std::vector<int> covered(static_cast<size_t>(2 * nn), 0);
    for (const auto& p : ports)
        for (int d : p.dofs) covered[static_cast<size_t>(d)] += 1;
    for (int n = 0; n < nn; ++n) {
        const int want = sharing[static_cast<size_t>(n)].size() >= 2 ? 1 : 0;
        if (covered[static_cast<size_t>(n)] != want ||
            covered[static_cast<size_t>(nn + n)] != want)
            throw std::logic_error("classify_states: port cover mismatch");
    }
    for (const auto& p : ports) {
        if (p.kind == PortKind::VerticalEdge) {
            if (out.ports.vertical_dim == 0) out.ports.vertical_dim = p.dim();
            if (p.dim() != out.ports.vertical_dim)
                throw std::logic_error("classify_states: vertical port dims differ");
        } else if (p.kind == PortKind::HorizontalEdge) {
            if (out.ports.horizontal_dim == 0) out.ports.horizontal_dim = p.dim();
            if (p.dim() != out.ports.horizontal_dim)
                throw std::logic_error("classify_states: horizontal port dims differ");
        }
    }

    // Per-subdomain interior/interface maps.
    auto& subs = out.state_map.subs;
    subs.assign(static_cast<size_t>(L.n_omega), {});
    for (size_t pid = 0; pid < ports.size(); ++pid) {
        for (int s : ports[pid].sharing) {
            auto& sub = subs[static_cast<size_t>(s)];
            sub.port_ids.push_back(static_cast<int>(pid));
            sub.port_offsets.push_back(static_cast<int>(sub.interface.size()));
            sub.interface.insert(sub.interface.end(), ports[pid].dofs.begin(),
                                 ports[pid].dofs.end());
        }
    }
    for (int n = 0; n < nn; ++n) {
        if (sharing[static_cast<size_t>(n)].size() >= 2) continue;
        auto& sub = subs[static_cast<size_t>(L.node_owner[static_cast<size_t>(n)])];
        sub.interior.push_back(n);
    }
    for (auto& sub : subs) {
        const size_t n_u = sub.interior.size();
        for (size_t k = 0; k < n_u; ++k) sub.interior.push_back(sub.interior[k] + nn);
        std::sort(sub.interior.begin(), sub.interior.end());
    }
    return out;
}

CompatibilityMatrix build_constraints(const PortSet& ports,
                                      const SubdomainStateMap& map) {
    CompatibilityMatrix C;
    int n_rows = 0;
    for (const auto& p : ports.ports)
        n_rows += (static_cast<int>(p.sharing.size()) - 1) * p.dim();
    C.n_rows = n_rows;

    const int n_sub = static_cast<int>(map.subs.size());
    std::vector<std::vector<Triplet>> trips(static_cast<size_t>(n_sub));

    // Offset of port pid inside subdomain s's interface vector.
    auto port_offset = [&](int s, int pid) {
        const auto& sub = map.subs[static_cast<size_t>(s)];
        for (size_t k = 0; k < sub.port_ids.size(); ++k)
            if (sub.port_ids[k] == pid) return sub.port_offsets[k];
        throw std::logic_error("build_constraints: port not wired to subdomain");
    };

    int row = 0;
    for (size_t pid = 0; pid < ports.ports.size(); ++pid) {
        const auto& p = ports.ports[pid];
        for (size_t c = 0; c + 1 < p.sharing.size(); ++c) {
            const int sa = p.sharing[c];
            const int sb = p.sharing[c + 1];
            const int offa = port_offset(sa, static_cast<int>(pid));
            const int offb = port_offset(sb, static_cast<int>(pid));
            for (int d = 0; d < p.dim(); ++d) {
                trips[static_cast<size_t>(sa)].emplace_back(row + d, offa + d, 1.0);
                trips[static_cast<size_t>(sb)].emplace_back(row + d, offb + d, -1.0);
            }
            row += p.dim();
        }
    }
    C.A.reserve(static_cast<size_t>(n_sub));
    for (int s = 0; s < n_sub; ++s) {
        SpMat A(n_rows, map.n_interface(s));
        A.setFromTriplets(trips[static_cast<size_t>(s)].begin(),
                          trips[static_cast<size_t>(s)].end());
        C.A.push_back(std::move(A));
    }
    return C;
}

SubdomainVectors gather(const Vec& x, const SubdomainStateMap& map) {
    SubdomainVectors sv;
    sv.interior.reserve(map.subs.size());
    sv.interface.reserve(map.subs.size());
    for (const auto& sub : map.subs) {
        Vec xi(static_cast<Eigen::Index>(sub.interior.size()));
        for (size_t k = 0; k < sub.interior.size(); ++k)
            xi[static_cast<Eigen::Index>(k)] = x[sub.interior[k]];
        Vec xg(static_cast<Eigen::Index>(sub.interface.size()));
        for (size_t k = 0; k < sub.interface.size(); ++k)
            xg[static_cast<Eigen::Index>(k)] = x[sub.interface[k]];
        sv.interior.push_back(std::move(xi));
        sv.interface.push_back(std::move(xg));
    }
    return sv;
}

Vec scatter(const SubdomainVectors& sv, const SubdomainStateMap& map,
            int num_dofs, double tol) {
    Vec x = Vec::Zero(num_dofs);
    std::vector<char> seen(static_cast<size_t>(num_dofs), 0);
    auto place = [&](int dof, double val) {
        if (!seen[static_cast<size_t>(dof)]) {
            x[dof] = val;
            seen[static_cast<size_t>(dof)] = 1;
        } else if (std::abs(x[dof] - val) > tol) {
            throw std::runtime_error("scatter: shared DOF copies disagree");
        }
    };
    for (size_t s = 0; s < map.subs.size(); ++s) {
        const auto& sub = map.subs[s];
        for (size_t k = 0; k < sub.interior.size(); ++k)
            place(sub.interior[k], sv.interior[s][static_cast<Eigen::Index>(k)]);
        for (size_t k = 0; k < sub.interface.size(); ++k)
            place(sub.interface[k], sv.interface[s][static_cast<Eigen::Index>(k)]);
    }
    for (int d = 0; d < num_dofs; ++d)
        if (!seen[static_cast<size_t>(d)])
            throw std::logic_error("scatter: uncovered DOF");
    return x;
}

SubdomainResidual::SubdomainResidual(int sub, const SubdomainLayout& layout,
                                     const SubdomainStateMap& map,
                                     const Grid2D& grid,
                                     const BurgersParams& params)
    : grid_(&grid), params_(params) {
    const int nn = grid.num_nodes();
    auto st = build_stencils(grid);
    const auto& smap = map.subs[static_cast<size_t>(sub)];

    // Owned nodes in ascending order (matches layout.residual_rows order).
    std::vector<int> owned;
    for (int n = 0; n < nn; ++n)
        if (layout.node_owner[static_cast<size_t>(n)] == sub) owned.push_back(n);

    // Local node numbering: owned first, then halo nodes referenced by their stencils.
    std::unordered_map<int, int> local;
    std::vector<int> local_nodes;
    auto intern = [&](int n) {
        auto it = local.find(n);
        if (it != local.end()) return it->second;
        const int idx = static_cast<int>(local_nodes.size());
        local.emplace(n, idx);
        local_nodes.push_back(n);
        return idx;
    };
    for (int n : owned) intern(n);
    for (int n : owned) {
        const auto& s = st[static_cast<size_t>(n)];
        intern(s.xm); intern(s.xp); intern(s.ym); intern(s.yp);
    }
    n_local_nodes_ = static_cast<int>(local_nodes.size());
    n_int_ = static_cast<int>(smap.interior.size());
    n_gam_ = static_cast<int>(smap.interface.size());

    rows_.reserve(owned.size() * 2);
    for (int n : owned) rows_.push_back(n);
    for (int n : owned) rows_.push_back(nn + n);

    nodes_.reserve(owned.size());
    for (size_t k = 0; k < owned.size(); ++k) {
        LocalNode ln;
        const auto& s = st[static_cast<size_t>(owned[k])];
        ln.st = s;
        ln.st.c = local.at(s.c);
        ln.st.xm = local.at(s.xm);
        ln.st.xp = local.at(s.xp);
        ln.st.ym = local.at(s.ym);
        ln.st.yp = local.at(s.yp);
        ln.r_row_u = static_cast<int>(k);
        ln.r_row_v = static_cast<int>(k + owned.size());
        nodes_.push_back(ln);
    }

    // Where each local (node, component) value lives: interior or interface
    // vector of this subdomain. Both components of a node live in the same
    // vector kind, so the slot is recorded per DOF.
    std::unordered_map<int, int> int_pos, gam_pos;
    for (size_t k = 0; k < smap.interior.size(); ++k) int_pos[smap.interior[k]] = static_cast<int>(k);
    for (size_t k = 0; k < smap.interface.size(); ++k)
        gam_pos.emplace(smap.interface[k], static_cast<int>(k));  // first copy wins

    gather_nodes_ = local_nodes;
    gather_src_.resize(local_nodes.size() * 2);
    gather_from_gamma_.resize(local_nodes.size() * 2);
    for (size_t k = 0; k < local_nodes.size(); ++k) {
        for (int comp = 0; comp < 2; ++comp) {
            const int dof = local_nodes[k] + comp * nn;
            const size_t slot = k + static_cast<size_t>(comp) * local_nodes.size();
            if (auto it = int_pos.find(dof); it != int_pos.end()) {
                gather_src_[slot] = it->second;
                gather_from_gamma_[slot] = false;
            } else if (auto jt = gam_pos.find(dof); jt != gam_pos.end()) {
                gather_src_[slot] = jt->second;
                gather_from_gamma_[slot] = true;
            } else {
                throw std::logic_error("SubdomainResidual: stencil DOF not in interior or interface");
            }
        }
    }
}

void SubdomainResidual::eval(const Vec& x_int, const Vec& x_gam,
                             const Vec& prev_int, const Vec& prev_gam, Vec& r,
                             SpMat& J_int, SpMat& J_gam) const {
    if (x_int.size() != n_int_ || x_gam.size() != n_gam_)
        throw std::invalid_argument("SubdomainResidual: dimension mismatch");
    const size_t nl = gather_nodes_.size();
    std::vector<double> vals(2 * nl), prev_vals(2 * nl);
    for (size_t k = 0; k < 2 * nl; ++k) {
        const auto& src = gather_from_gamma_[k] ? x_gam : x_int;
        vals[k] = src[gather_src_[k]];
        const auto& psrc = gather_from_gamma_[k] ? prev_gam : prev_int;
        prev_vals[k] = psrc[gather_src_[k]];
    }
    const double* u = vals.data();
    const double* v = vals.data() + nl;

    r.resize(static_cast<Eigen::Index>(rows_.size()));
    std::vector<Triplet> t_int, t_gam;
    t_int.reserve(nodes_.size() * 8);
    t_gam.reserve(nodes_.size() * 8);
    for (const auto& ln : nodes_) {
        double fu, fv;
        detail::node_rhs(
            ln.st, params_.nu, [&](int k) { return u[k]; },
            [&](int k) { return v[k]; }, fu, fv);
        r[ln.r_row_u] = u[ln.st.c] - prev_vals[static_cast<size_t>(ln.st.c)] -
                        params_.tau * fu;
        r[ln.r_row_v] = v[ln.st.c] -
                        prev_vals[nl + static_cast<size_t>(ln.st.c)] -
                        params_.tau * fv;
        detail::node_be_jacobian(
            ln.st, params_.nu, params_.tau, [&](int k) { return u[k]; },
            [&](int k) { return v[k]; },
            [&](int row_kind, int col_node, bool col_v, double val) {
                const int row = (row_kind == 0) ? ln.r_row_u : ln.r_row_v;
                const size_t slot = static_cast<size_t>(col_node) +
                                    (col_v ? nl : 0);
                if (gather_from_gamma_[slot])
                    t_gam.emplace_back(row, gather_src_[slot], val);
                else
                    t_int.emplace_back(row, gather_src_[slot], val);
            });
    }
    J_int.resize(static_cast<Eigen::Index>(rows_.size()), n_int_);
    J_gam.resize(static_cast<Eigen::Index>(rows_.size()), n_gam_);
    J_int.setFromTriplets(t_int.begin(), t_int.end());
    J_gam.setFromTriplets(t_gam.begin(), t_gam.end());
}

Vec SubdomainResidual::residual(const Vec& x_int, const Vec& x_gam,
                                const Vec& prev_int, const Vec& prev_gam) const {
    if (x_int.size() != n_int_ || x_gam.size() != n_gam_)
        throw std::invalid_argument("SubdomainResidual: dimension mismatch");
    const size_t nl = gather_nodes_.size();
    std::vector<double> vals(2 * nl), prev_vals(2 * nl);
    for (size_t k = 0; k < 2 * nl; ++k) {
        const auto& src = gather_from_gamma_[k] ? x_gam : x_int;
        vals[k] = src[gather_src_[k]];
        const auto& psrc = gather_from_gamma_[k] ? prev_gam : prev_int;
        prev_vals[k] = psrc[gather_src_[k]];
    }
    const double* u = vals.data();
    const double* v = vals.data() + nl;
    Vec r(static_cast<Eigen::Index>(rows_.size()));
    for (const auto& ln : nodes_) {
        double fu, fv;
        detail::node_rhs(
            ln.st, params_.nu, [&](int k) { return u[k]; },
            [&](int k) { return v[k]; }, fu, fv);
        r[ln.r_row_u] = u[ln.st.c] - prev_vals[static_cast<size_t>(ln.st.c)] -
                        params_.tau * fu;
        r[ln.r_row_v] = v[ln.st.c] -
                        prev_vals[nl + static_cast<size_t>(ln.st.c)] -
                        params_.tau * fv;
    }
    return r;
}

void SubdomainResidual::jacobians(const Vec& x_int, const Vec& x_gam,
                                  SpMat& J_int, SpMat& J_gam) const {
    Vec r;
    eval(x_int, x_gam, Vec::Zero(n_int_), Vec::Zero(n_gam_), r, J_int, J_gam);
}

std::string describe_layout(const SubdomainLayout& layout, const StateMaps& maps) {
    std::ostringstream os;
    os << "layout " << layout.blocks_x << "x" << layout.blocks_y << " n_omega "
       << layout.n_omega << "\n";
    for (size_t s = 0; s < maps.state_map.subs.size(); ++s) {
        const auto& sub = maps.state_map.subs[s];
        os << "subdomain " << s << " interior " << sub.interior.size()
           << " interface " << sub.interface.size() << " ports";
        for (int pid : sub.port_ids) os << ' ' << pid;
        os << "\n";
    }
    for (size_t pid = 0; pid < maps.ports.ports.size(); ++pid) {
        const auto& p = maps.ports.ports[pid];
        os << "port " << pid << " kind " << static_cast<int>(p.kind) << " dim "
           << p.dim() << " sharing";
        for (int s : p.sharing) os << ' ' << s;
        os << " dofs";
        for (int d : p.dofs) os << ' ' << d;
        os << "\n";
    }
    return os.str();
}

}  // namespace ddrom
