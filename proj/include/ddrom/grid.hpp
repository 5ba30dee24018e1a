#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstdint>
#include <stdexcept>

namespace ddrom {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

enum class BcKind : std::int32_t { Periodic = 0, HomogeneousNeumann = 1 };

/// Uniform structured grid for the two-component state.
/// Periodic grids carry nx*ny nodes with spacing L/nx (no duplicated wrap
/// node); Neumann grids include both endpoints, spacing L/(nx-1).
struct Grid2D {
    int nx = 0;
    int ny = 0;
    double x0 = 0.0, x1 = 1.0;
    double y0 = 0.0, y1 = 1.0;
    double hx = 0.0;
    double hy = 0.0;
    BcKind bc = BcKind::Periodic;

    int num_nodes() const { return nx * ny; }
    // State layout: [u block; v block], each lexicographic with x fastest.
    int num_dofs() const { return 2 * nx * ny; }

    int node(int i, int j) const { return j * nx + i; }
    int u_dof(int i, int j) const { return node(i, j); }
    int v_dof(int i, int j) const { return nx * ny + node(i, j); }

    double x_of(int i) const { return x0 + i * hx; }
    double y_of(int j) const { return y0 + j * hy; }
};

struct BurgersParams {
    double nu = 1e-3;
    double tau = 0.02;
    double T = 2.0;
    int Nt = 100;
};

Grid2D build_grid(int nx, int ny, double x0, double x1, double y0, double y1,
                  BcKind bc);

BurgersParams make_params(double nu, double tau, double T);

}  // namespace ddrom
