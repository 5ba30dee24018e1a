#pragma once

#include "ddrom/grid.hpp"
#include "ddrom/partition.hpp"

#include <functional>
#include <vector>

namespace ddrom {

/// Equality-constrained least-squares problem
///   min h/2 sum_i ||r_i(q_i)||^2  s.t.  sum_i C_i q_i = 0
/// with per-block residual evaluators and constraint matrices.
struct ConstrainedLsProblem {
    struct Block {
        int dim = 0;
        // r and J at the current iterate; J is residual_dim x dim.
        std::function<void(const Vec& q, Vec& r, SpMat& J)> eval;
        SpMat C;  // n_con x dim (may be empty for unconstrained blocks)
    };
    std::vector<Block> blocks;
    int n_con = 0;
    double h = 1.0;

    int total_dim() const {
        int n = 0;
        for (const auto& b : blocks) n += b.dim;
        return n;
    }
};

struct SqpOptions {
    double tol_grad = 1e-8;
    double tol_con = 1e-8;
    int max_iter = 20;
    double ls_beta = 0.5;
    double ls_c = 1e-4;
    double penalty = 10.0;
};

struct SqpResult {
    std::vector<Vec> solution;
    Vec multipliers;
    int iterations = 0;
    bool converged = false;
    double residual_norm = 0.0;      // sqrt(sum_i ||r_i||^2)
    double constraint_violation = 0.0;
    double stationarity = 0.0;
    // timing split, seconds
    double local_time = 0.0;   // max-over-subdomains assembly per iteration, summed
    double global_time = 0.0;  // KKT factorization/solve and bookkeeping
};

struct KktSystem {
    SpMat M;    // [[H, C^T], [C, 0]]
    Vec rhs;    // [-h J^T r; -c]
    int n_prim = 0;
};

/// Gauss-Newton KKT system at the given iterate.
KktSystem assemble_kkt(const ConstrainedLsProblem& problem,
                       const std::vector<Vec>& iterate);

/// Inexact Lagrange-Newton SQP with Gauss-Newton Hessian, direct sparse
/// KKT solves, full steps with Armijo backtracking on the l1 merit.
SqpResult solve_step(const ConstrainedLsProblem& problem,
                     const std::vector<Vec>& initial_guess,
                     const SqpOptions& options);

struct DdSolveResult {
    std::vector<Vec> trajectory;     // monolithic states, Nt+1
    std::vector<SqpResult> steps;    // per time step (primal blocks dropped)
    double local_time = 0.0;
    double global_time = 0.0;
    double total_time() const { return local_time + global_time; }
    double max_constraint_violation = 0.0;
};

struct DdFomContext {
    const Grid2D* grid;
    const SubdomainLayout* layout;
    const StateMaps* maps;
    const CompatibilityMatrix* constraints;
    BurgersParams params;
};

/// DD FOM time loop: every step solves the constrained least-squares
/// problem warm-started from the previous step. Throws on a
/// non-converged step.
DdSolveResult dd_fom_solve(const DdFomContext& ctx, const Vec& x0,
                           const SqpOptions& options,
                           std::vector<SqpResult>* step_log = nullptr);

}  // namespace ddrom
