#pragma once

#include "ddrom/grid.hpp"
#include "ddrom/stencil.hpp"

#include <vector>

namespace ddrom {

struct SubdomainLayout;  // partition.hpp

/// Eq.-style initial condition: u = v = |mu_i sin(2 pi x) sin(2 pi y)|
/// with mu_i the amplitude of the subdomain owning each node.
Vec initial_condition(const Grid2D& grid, const SubdomainLayout& layout,
                      const Vec& mu);

/// Semi-discrete Burgers right-hand side f(x).
Vec rhs(const Vec& state, const Grid2D& grid, double nu);
void rhs_into(const Vec& state, const std::vector<NodeStencil>& st,
              const Grid2D& grid, double nu, Vec& out);

/// Backward Euler residual r = x_k - x_prev - tau f(x_k).
Vec be_residual(const Vec& x_k, const Vec& x_prev, const BurgersParams& p,
                const Grid2D& grid);

/// Jacobian of the Backward Euler residual, I - tau df/dx.
SpMat be_jacobian(const Vec& x_k, const BurgersParams& p, const Grid2D& grid);

struct NewtonReport {
    bool converged = false;
    int iterations = 0;
    double final_residual_norm = 0.0;
};

struct MonolithicSolveResult {
    std::vector<Vec> trajectory;         // Nt+1 states, index 0 = IC
    std::vector<NewtonReport> steps;     // Nt entries
    bool all_converged = true;
};

/// Newton time stepping for the monolithic FOM. Converged when
/// ||r||_2 <= 1e-10 sqrt(N_x), capped at 25 iterations per step.
MonolithicSolveResult solve_monolithic(const BurgersParams& p,
                                       const Grid2D& grid, const Vec& x0);

}  // namespace ddrom
