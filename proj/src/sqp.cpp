#include "ddrom/sqp.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace ddrom {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct BlockWork {
    Vec r;
    SpMat J;
    SpMat H;       // h J^T J
    Vec grad_ls;   // h J^T r
    double assembly_time = 0.0;
};

void eval_blocks(const ConstrainedLsProblem& p, const std::vector<Vec>& q,
                 std::vector<BlockWork>& work, double& max_local) {
    const int nb = static_cast<int>(p.blocks.size());
    max_local = 0.0;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < nb; ++i) {
        const double t0 = now_seconds();
        auto& w = work[static_cast<size_t>(i)];
        p.blocks[static_cast<size_t>(i)].eval(q[static_cast<size_t>(i)], w.r, w.J);
        w.H = (p.h * (SpMat(w.J.transpose()) * w.J)).pruned();
        w.grad_ls = p.h * (w.J.transpose() * w.r);
        w.assembly_time = now_seconds() - t0;
    }
    for (const auto& w : work) max_local = std::max(max_local, w.assembly_time);
}

double merit(const ConstrainedLsProblem& p, const std::vector<Vec>& q,
             double penalty, double& max_local) {
    const int nb = static_cast<int>(p.blocks.size());
    std::vector<double> sq(static_cast<size_t>(nb), 0.0);
    std::vector<double> times(static_cast<size_t>(nb), 0.0);
    Vec c = Vec::Zero(p.n_con);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < nb; ++i) {
        const double t0 = now_seconds();
        Vec r;
        SpMat J;
        p.blocks[static_cast<size_t>(i)].eval(q[static_cast<size_t>(i)], r, J);
        sq[static_cast<size_t>(i)] = r.squaredNorm();
        times[static_cast<size_t>(i)] = now_seconds() - t0;
    }
    double total = 0.0;
    max_local = 0.0;
    for (int i = 0; i < nb; ++i) {
        total += sq[static_cast<size_t>(i)];
        max_local = std::max(max_local, times[static_cast<size_t>(i)]);
        if (p.blocks[static_cast<size_t>(i)].C.rows() > 0)
            c += p.blocks[static_cast<size_t>(i)].C * q[static_cast<size_t>(i)];
    }
    return 0.5 * p.h * total + penalty * c.lpNorm<1>();
}

}  // namespace

KktSystem assemble_kkt(const ConstrainedLsProblem& p,
                       const std::vector<Vec>& iterate) {
    std::vector<BlockWork> work(p.blocks.size());
    double local = 0.0;
    eval_blocks(p, iterate, work, local);

    KktSystem kkt;
    kkt.n_prim = p.total_dim();
    const int n = kkt.n_prim + p.n_con;
    kkt.M.resize(n, n);
    kkt.rhs = Vec::Zero(n);

    std::vector<Triplet> trips;
    int off = 0;
    for (size_t i = 0; i < p.blocks.size(); ++i) {
        const auto& b = p.blocks[i];
        const auto& w = work[i];
        for (int k = 0; k < w.H.outerSize(); ++k)
            for (SpMat::InnerIterator it(w.H, k); it; ++it)
                trips.emplace_back(off + static_cast<int>(it.row()),
                                   off + static_cast<int>(it.col()), it.value());
        if (b.C.rows() > 0) {
            for (int k = 0; k < b.C.outerSize(); ++k)
                for (SpMat::InnerIterator it(b.C, k); it; ++it) {
                    trips.emplace_back(kkt.n_prim + static_cast<int>(it.row()),
                                       off + static_cast<int>(it.col()), it.value());
                    trips.emplace_back(off + static_cast<int>(it.col()),
                                       kkt.n_prim + static_cast<int>(it.row()), it.value());
                }
            kkt.rhs.segment(kkt.n_prim, p.n_con) -= b.C * iterate[i];
        }
        kkt.rhs.segment(off, b.dim) = -w.grad_ls;
        off += b.dim;
    }
    kkt.M.setFromTriplets(trips.begin(), trips.end());
    return kkt;
}

SqpResult solve_step(const ConstrainedLsProblem& p,
                     const std::vector<Vec>& initial_guess,
                     const SqpOptions& opt) {
    const size_t nb = p.blocks.size();
    std::vector<Vec> q = initial_guess;
    for (size_t i = 0; i < nb; ++i)
        if (q[i].size() != p.blocks[i].dim)
            throw std::invalid_argument("solve_step: initial guess dimension mismatch");

    SqpResult res;
    res.multipliers = Vec::Zero(p.n_con);
    std::vector<BlockWork> work(nb);
    // Set DDROM_SQP_TRACE=1 to print per-iteration diagnostics to stderr.
    const bool trace = std::getenv("DDROM_SQP_TRACE") != nullptr;

    // Stationarity is tested with the least-squares multiplier estimate
    // lambda = argmin ||grad + C^T lambda||_2, the tightest certificate
    // that the KKT conditions hold at the iterate. C is constant, so
    // C C^T is factorized once per step.
    Eigen::SimplicialLDLT<SpMat> cct;
    if (p.n_con > 0) {
        SpMat M(p.n_con, p.n_con);
        for (size_t i = 0; i < nb; ++i)
            if (p.blocks[i].C.rows() > 0)
                M += SpMat(p.blocks[i].C * p.blocks[i].C.transpose());
        cct.compute(M);
        if (cct.info() != Eigen::Success)
            throw std::runtime_error("solve_step: constraint Gram factorization failed");
    }

    Eigen::SparseLU<SpMat> lu;
    bool polish = false;
    for (int iter = 0; iter <= opt.max_iter; ++iter) {
        double local = 0.0;
        eval_blocks(p, q, work, local);
        res.local_time += local;

        const double tg0 = now_seconds();
        Vec c = Vec::Zero(p.n_con);
        double sumsq = 0.0;
        for (size_t i = 0; i < nb; ++i) {
            sumsq += work[i].r.squaredNorm();
            if (p.blocks[i].C.rows() > 0) c += p.blocks[i].C * q[i];
        }
        res.residual_norm = std::sqrt(sumsq);
        res.constraint_violation = (p.n_con > 0) ? c.lpNorm<Eigen::Infinity>() : 0.0;

        if (p.n_con > 0) {
            Vec rhs_l = Vec::Zero(p.n_con);
            for (size_t i = 0; i < nb; ++i)
                if (p.blocks[i].C.rows() > 0)
                    rhs_l -= p.blocks[i].C * work[i].grad_ls;
            res.multipliers = cct.solve(rhs_l);
        }
        double stat = 0.0;
        for (size_t i = 0; i < nb; ++i) {
            Vec g = work[i].grad_ls;
            if (p.blocks[i].C.rows() > 0)
                g += p.blocks[i].C.transpose() * res.multipliers;
            if (g.size() > 0) stat = std::max(stat, g.lpNorm<Eigen::Infinity>());
        }
        res.stationarity = stat;
        res.iterations = iter;
        if (trace)
            std::fprintf(stderr,
                         "sqp: iter %d ||r||=%.6e viol=%.3e stat=%.6e\n", iter,
                         res.residual_norm, res.constraint_violation, stat);
        if (stat <= opt.tol_grad && res.constraint_violation <= opt.tol_con) {
            // One polishing iteration after the test first passes: on
            // consistent problems the Gauss-Newton tail is quadratic, so
            // the returned iterate lands far below the tolerance.
            res.converged = true;
            if (polish || iter == opt.max_iter) {
                res.global_time += now_seconds() - tg0;
                break;
            }
            polish = true;
        } else {
            res.converged = false;
            polish = false;
        }
        if (iter == opt.max_iter) {
            res.global_time += now_seconds() - tg0;
            break;
        }

        // KKT matrix [[H, C^T], [C, 0]] from the block pieces.
        const int n_prim = p.total_dim();
        const int n = n_prim + p.n_con;
        Vec rhs = Vec::Zero(n);
        rhs.segment(n_prim, p.n_con) = -c;
        bool factorized = false;
        for (int attempt = 0; attempt < 2 && !factorized; ++attempt) {
            const double reg = (attempt == 0) ? 0.0 : 1e-10;
            std::vector<Triplet> trips;
            int off = 0;
            for (size_t i = 0; i < nb; ++i) {
                const auto& b = p.blocks[i];
                const auto& w = work[i];
                for (int k = 0; k < w.H.outerSize(); ++k)
                    for (SpMat::InnerIterator it(w.H, k); it; ++it)
                        trips.emplace_back(off + static_cast<int>(it.row()),
                                           off + static_cast<int>(it.col()), it.value());
                if (reg > 0.0)
                    for (int d = 0; d < b.dim; ++d)
                        trips.emplace_back(off + d, off + d, reg);
                if (b.C.rows() > 0) {
                    for (int k = 0; k < b.C.outerSize(); ++k)
                        for (SpMat::InnerIterator it(b.C, k); it; ++it) {
                            trips.emplace_back(n_prim + static_cast<int>(it.row()),
                                               off + static_cast<int>(it.col()), it.value());
                            trips.emplace_back(off + static_cast<int>(it.col()),
                                               n_prim + static_cast<int>(it.row()), it.value());
                        }
                }
                rhs.segment(off, b.dim) = -work[i].grad_ls;
                off += b.dim;
            }
            SpMat M(n, n);
            M.setFromTriplets(trips.begin(), trips.end());
            lu.compute(M);
            factorized = (lu.info() == Eigen::Success);
            if (!factorized && attempt == 1)
                throw std::runtime_error("solve_step: KKT factorization failed");
        }
        Vec sol = lu.solve(rhs);
        res.global_time += now_seconds() - tg0;

        // Full step; fall back to Armijo backtracking on the l1 merit.
        std::vector<Vec> dq(nb);
        {
            int off = 0;
            for (size_t i = 0; i < nb; ++i) {
                dq[i] = sol.segment(off, p.blocks[i].dim);
                off += p.blocks[i].dim;
            }
        }
        const double phi0 = 0.5 * p.h * sumsq + opt.penalty * c.lpNorm<1>();
        double dir = -opt.penalty * c.lpNorm<1>();
        for (size_t i = 0; i < nb; ++i) dir += work[i].grad_ls.dot(dq[i]);

        double alpha = 1.0;
        std::vector<Vec> q_trial(nb);
        auto apply = [&](double a) {
            for (size_t i = 0; i < nb; ++i) q_trial[i] = q[i] + a * dq[i];
        };
        apply(alpha);
        double lsl = 0.0;
        double phi = merit(p, q_trial, opt.penalty, lsl);
        res.local_time += lsl;
        if (phi > phi0) {
            for (int bt = 0; bt < 40; ++bt) {
                alpha *= opt.ls_beta;
                apply(alpha);
                phi = merit(p, q_trial, opt.penalty, lsl);
                res.local_time += lsl;
                if (phi <= phi0 + opt.ls_c * alpha * dir) break;
            }
        }
        if (trace)
            std::fprintf(stderr,
                         "sqp:   step alpha=%.3e dir=%.3e phi0=%.9e phi=%.9e\n",
                         alpha, dir, phi0, phi);
        q = q_trial;
    }
    res.solution = std::move(q);
    return res;
}

DdSolveResult dd_fom_solve(const DdFomContext& ctx, const Vec& x0,
                           const SqpOptions& options,
                           std::vector<SqpResult>* step_log) {
    const auto& map = ctx.maps->state_map;
    const int n_sub = ctx.layout->n_omega;

    std::vector<SubdomainResidual> residuals;
    residuals.reserve(static_cast<size_t>(n_sub));
    for (int i = 0; i < n_sub; ++i)
        residuals.emplace_back(i, *ctx.layout, map, *ctx.grid, ctx.params);

    SubdomainVectors prev = gather(x0, map);

    DdSolveResult out;
    out.trajectory.reserve(static_cast<size_t>(ctx.params.Nt) + 1);
    out.trajectory.push_back(x0);

    ConstrainedLsProblem problem;
    problem.h = ctx.grid->hx * ctx.grid->hy;
    problem.n_con = ctx.constraints->n_rows;
    problem.blocks.resize(static_cast<size_t>(n_sub));
    for (int i = 0; i < n_sub; ++i) {
        auto& b = problem.blocks[static_cast<size_t>(i)];
        const int ni = map.n_interior(i);
        const int ng = map.n_interface(i);
        b.dim = ni + ng;
        // C_i = [0 | A_i]
        std::vector<Triplet> trips;
        const SpMat& A = ctx.constraints->A[static_cast<size_t>(i)];
        for (int k = 0; k < A.outerSize(); ++k)
            for (SpMat::InnerIterator it(A, k); it; ++it)
                trips.emplace_back(static_cast<int>(it.row()),
                                   ni + static_cast<int>(it.col()), it.value());
        b.C.resize(ctx.constraints->n_rows, b.dim);
        b.C.setFromTriplets(trips.begin(), trips.end());
        b.eval = [&, i, ni, ng](const Vec& q, Vec& r, SpMat& J) {
            Vec x_int = q.head(ni);
            Vec x_gam = q.tail(ng);
            SpMat J_int, J_gam;
            residuals[static_cast<size_t>(i)].eval(
                x_int, x_gam, prev.interior[static_cast<size_t>(i)],
                prev.interface[static_cast<size_t>(i)], r, J_int, J_gam);
            std::vector<Triplet> jt;
            jt.reserve(static_cast<size_t>(J_int.nonZeros() + J_gam.nonZeros()));
            for (int k = 0; k < J_int.outerSize(); ++k)
                for (SpMat::InnerIterator it(J_int, k); it; ++it)
                    jt.emplace_back(static_cast<int>(it.row()),
                                    static_cast<int>(it.col()), it.value());
            for (int k = 0; k < J_gam.outerSize(); ++k)
                for (SpMat::InnerIterator it(J_gam, k); it; ++it)
                    jt.emplace_back(static_cast<int>(it.row()),
                                    ni + static_cast<int>(it.col()), it.value());
            J.resize(r.size(), ni + ng);
            J.setFromTriplets(jt.begin(), jt.end());
        };
    }

    std::vector<Vec> guess(static_cast<size_t>(n_sub));
    for (int k = 1; k <= ctx.params.Nt; ++k) {
        for (int i = 0; i < n_sub; ++i) {
            Vec q(problem.blocks[static_cast<size_t>(i)].dim);
            q << prev.interior[static_cast<size_t>(i)], prev.interface[static_cast<size_t>(i)];
            guess[static_cast<size_t>(i)] = std::move(q);
        }
        SqpResult step = solve_step(problem, guess, options);
        if (!step.converged)
            throw std::runtime_error("dd_fom_solve: SQP did not converge at step " +
                                     std::to_string(k));
        out.local_time += step.local_time;
        out.global_time += step.global_time;
        out.max_constraint_violation =
            std::max(out.max_constraint_violation, step.constraint_violation);

        for (int i = 0; i < n_sub; ++i) {
            const int ni = map.n_interior(i);
            prev.interior[static_cast<size_t>(i)] =
                step.solution[static_cast<size_t>(i)].head(ni);
            prev.interface[static_cast<size_t>(i)] =
                step.solution[static_cast<size_t>(i)].tail(
                    map.n_interface(i));
        }
        out.trajectory.push_back(
            scatter(prev, map, ctx.grid->num_dofs(), 10.0 * options.tol_con));
        step.solution.clear();
        if (step_log) step_log->push_back(step);
        out.steps.push_back(std::move(step));
    }
    return out;
}

}  // namespace ddrom
