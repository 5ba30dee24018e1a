#pragma once

#include "ddrom/burgers.hpp"
#include "ddrom/grid.hpp"

#include <string>
#include <vector>

namespace ddrom {

/// Rectangular node-disjoint tiling of the grid into blocks_x * blocks_y
/// algebraic subdomains. A node's residual rows (u and v) belong to the
/// block owning the node.
struct SubdomainLayout {
    int blocks_x = 1;
    int blocks_y = 1;
    int n_omega = 1;
    int block_nx = 0;  // nodes per block in x
    int block_ny = 0;
    std::vector<int> node_owner;                 // node -> subdomain
    std::vector<std::vector<int>> residual_rows; // per subdomain, global DOF rows

    int owner_of(int bi, int bj) const { return bj * blocks_x + bi; }
};

enum class PortKind : std::int32_t { VerticalEdge = 0, HorizontalEdge = 1, Corner = 2 };

/// Group of interface DOFs shared by the same set of subdomains along one
/// geometric cut segment. dofs are global indices in canonical order:
/// minus-side column/row first, then plus side, nodes by increasing
/// transverse coordinate, all u DOFs before all v DOFs.
struct Port {
    PortKind kind = PortKind::Corner;
    std::vector<int> dofs;
    std::vector<int> sharing;  // subdomain ids, ascending
    int dim() const { return static_cast<int>(dofs.size()); }
};

struct PortSet {
    std::vector<Port> ports;
    int num_vertical = 0;
    int num_horizontal = 0;
    int num_corner = 0;
    int vertical_dim = 0;    // common dimension of all vertical edge ports
    int horizontal_dim = 0;
};

/// Per-subdomain split of the state into interior and interface DOFs.
/// The interface vector is the concatenation of the subdomain's ports
/// (ascending port id, each in canonical port order).
struct SubdomainStateMap {
    struct Sub {
        std::vector<int> interior;           // global DOF indices
        std::vector<int> interface;          // global DOF indices, port-concatenated
        std::vector<int> port_ids;           // ports touching this subdomain
        std::vector<int> port_offsets;       // offset of each port inside interface
    };
    std::vector<Sub> subs;
    int n_interior(int i) const { return static_cast<int>(subs[i].interior.size()); }
    int n_interface(int i) const { return static_cast<int>(subs[i].interface.size()); }
};

/// Signed incidence matrices A_i encoding chain-of-pairs equality of all
/// port copies: sum_i A_i x_i^Gamma = 0 iff every copy of every shared
/// DOF agrees.
struct CompatibilityMatrix {
    std::vector<SpMat> A;  // one per subdomain, N_A x N_i^Gamma
    int n_rows = 0;
};

SubdomainLayout partition(const Grid2D& grid, int blocks_x, int blocks_y);

struct StateMaps {
    SubdomainStateMap state_map;
    PortSet ports;
};

StateMaps classify_states(const SubdomainLayout& layout, const Grid2D& grid);

CompatibilityMatrix build_constraints(const PortSet& ports,
                                      const SubdomainStateMap& map);

struct SubdomainVectors {
    std::vector<Vec> interior;
    std::vector<Vec> interface;
};

SubdomainVectors gather(const Vec& x, const SubdomainStateMap& map);

/// Inverse of gather. Copies of shared DOFs must agree within tol;
/// disagreement beyond tol throws.
Vec scatter(const SubdomainVectors& sv, const SubdomainStateMap& map,
            int num_dofs, double tol = 0.0);

/// Restriction of the monolithic Backward Euler residual to one
/// subdomain, evaluated purely from local (interior, interface) vectors.
/// Shares the node kernels with the monolithic path, so concatenating all
/// subdomain residuals reproduces be_residual bitwise.
class SubdomainResidual {
public:
    SubdomainResidual(int sub, const SubdomainLayout& layout,
                      const SubdomainStateMap& map, const Grid2D& grid,
                      const BurgersParams& params);

    int residual_dim() const { return static_cast<int>(rows_.size()); }
    int interior_dim() const { return n_int_; }
    int interface_dim() const { return n_gam_; }

    /// r_i(x^Omega, x^Gamma, prev^Omega, prev^Gamma)
    Vec residual(const Vec& x_int, const Vec& x_gam, const Vec& prev_int,
                 const Vec& prev_gam) const;

    /// Jacobians wrt current interior / interface unknowns.
    void jacobians(const Vec& x_int, const Vec& x_gam, SpMat& J_int,
                   SpMat& J_gam) const;

    /// Residual and both Jacobians in one pass over the stencils.
    void eval(const Vec& x_int, const Vec& x_gam, const Vec& prev_int,
              const Vec& prev_gam, Vec& r, SpMat& J_int, SpMat& J_gam) const;

private:
    struct LocalNode {
        NodeStencil st;            // re-indexed into the local u-value array
        int r_row_u, r_row_v;      // rows in the local residual
    };
    const Grid2D* grid_;
    BurgersParams params_;
    std::vector<int> rows_;        // global residual rows, in local order
    std::vector<LocalNode> nodes_; // one per owned node
    std::vector<int> gather_nodes_;      // nodes needed, local order
    std::vector<int> gather_src_;        // for each local node: source slot
    std::vector<bool> gather_from_gamma_;
    int n_int_ = 0, n_gam_ = 0, n_local_nodes_ = 0;
};

/// Human-readable dump of layout and ports (index lists) for fixtures.
std::string describe_layout(const SubdomainLayout& layout,
                            const StateMaps& maps);

}  // namespace ddrom
