#include "ddrom/snapshots.hpp"

#include "ddrom/random_split.hpp"

#include <cstdio>
#include <random>
#include <stdexcept>

namespace ddrom {

std::vector<Vec> lhs_sample(const SampleConfig& cfg, int n_omega) {
    if (cfg.M < 1) throw std::invalid_argument("lhs_sample: M must be >= 1");
    if (!(cfg.gamma_hi > cfg.gamma_lo))
        throw std::invalid_argument("lhs_sample: gamma range not ordered");
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // One stratum per sample per dimension, randomly permuted.
    const double width = (cfg.gamma_hi - cfg.gamma_lo) / cfg.M;
    std::vector<std::vector<double>> gamma(
        static_cast<size_t>(n_omega), std::vector<double>(static_cast<size_t>(cfg.M)));
    for (int d = 0; d < n_omega; ++d) {
        std::vector<int> strata(static_cast<size_t>(cfg.M));
        for (int s = 0; s < cfg.M; ++s) strata[static_cast<size_t>(s)] = s;
        std::shuffle(strata.begin(), strata.end(), rng);
        for (int s = 0; s < cfg.M; ++s)
            gamma[static_cast<size_t>(d)][static_cast<size_t>(s)] =
                cfg.gamma_lo + (strata[static_cast<size_t>(s)] + unit(rng)) * width;
    }
    std::bernoulli_distribution coin(cfg.bernoulli_p);
    std::vector<Vec> out;
    out.reserve(static_cast<size_t>(cfg.M));
    for (int s = 0; s < cfg.M; ++s) {
        Vec mu(n_omega);
        for (int d = 0; d < n_omega; ++d) {
            const bool on = (d == 0 && cfg.force_xi0) ? true : coin(rng);
            mu[d] = on ? gamma[static_cast<size_t>(d)][static_cast<size_t>(s)] : 0.0;
        }
        out.push_back(std::move(mu));
    }
    return out;
}

SnapshotBundle collect_snapshots(const std::vector<Vec>& configs,
                                 const Grid2D& grid,
                                 const SubdomainLayout& layout,
                                 const StateMaps& maps,
                                 const BurgersParams& params, bool verbose) {
    const auto& ports = maps.ports.ports;
    std::vector<int> vports, hports;
    for (size_t p = 0; p < ports.size(); ++p) {
        if (ports[p].kind == PortKind::VerticalEdge) vports.push_back(static_cast<int>(p));
        else if (ports[p].kind == PortKind::HorizontalEdge) hports.push_back(static_cast<int>(p));
    }
    // One shared interior set requires equal interior dims across subdomains.
    const int n_int = maps.state_map.n_interior(0);
    for (int i = 1; i < layout.n_omega; ++i)
        if (maps.state_map.n_interior(i) != n_int)
            throw std::invalid_argument("collect_snapshots: interior dims differ across subdomains");

    const long per_cfg = static_cast<long>(params.Nt) + 1;
    const long n_cfg = static_cast<long>(configs.size());

    SnapshotBundle out;
    out.interior.role = SnapshotRole::Interior;
    out.vertical.role = SnapshotRole::VerticalPort;
    out.horizontal.role = SnapshotRole::HorizontalPort;
    out.interior.matrix.resize(n_cfg * per_cfg * layout.n_omega, n_int);
    out.vertical.matrix.resize(n_cfg * per_cfg * static_cast<long>(vports.size()),
                               maps.ports.vertical_dim);
    out.horizontal.matrix.resize(n_cfg * per_cfg * static_cast<long>(hports.size()),
                                 maps.ports.horizontal_dim);
    out.interior.provenance.resize(static_cast<size_t>(out.interior.matrix.rows()));
    out.vertical.provenance.resize(static_cast<size_t>(out.vertical.matrix.rows()));
    out.horizontal.provenance.resize(static_cast<size_t>(out.horizontal.matrix.rows()));

    long kept = 0;
    for (long c = 0; c < n_cfg; ++c) {
        const Vec x0 = initial_condition(grid, layout, configs[static_cast<size_t>(c)]);
        MonolithicSolveResult sol;
        try {
            sol = solve_monolithic(params, grid, x0);
        } catch (const std::exception&) {
            sol.all_converged = false;  // e.g. singular Jacobian on a blown-up state
        }
        // Skip configurations whose full-order solve is unusable: the
        // centered scheme has no stable trajectory for the sharpest
        // initial conditions at coarse resolutions, and non-converged or
        // blown-up states would poison the training data. Legitimate
        // transients on coarse grids peak at a few times the initial
        // amplitude; blow-up branches overshoot by an order of magnitude
        // or more, so a 10x tripwire separates them cleanly.
        const double amp0 = std::max(1e-12, x0.cwiseAbs().maxCoeff());
        bool usable = sol.all_converged;
        for (const auto& x : sol.trajectory) {
            if (!usable) break;
            usable = x.allFinite() && x.cwiseAbs().maxCoeff() <= 10.0 * amp0;
        }
        if (!usable) {
            out.skipped_configs.push_back(static_cast<int>(c));
            if (verbose)
                std::fprintf(stderr,
                             "snapshots: skipping config %ld (FOM unstable at this resolution)\n",
                             c);
            continue;
        }
        for (long k = 0; k <= params.Nt; ++k) {
            const Vec& x = sol.trajectory[static_cast<size_t>(k)];
            for (int i = 0; i < layout.n_omega; ++i) {
                const long row = (kept * per_cfg + k) * layout.n_omega + i;
                const auto& idx = maps.state_map.subs[static_cast<size_t>(i)].interior;
                for (size_t d = 0; d < idx.size(); ++d)
                    out.interior.matrix(row, static_cast<Eigen::Index>(d)) = x[idx[d]];
                out.interior.provenance[static_cast<size_t>(row)] = {
                    static_cast<int>(c), i, static_cast<int>(k)};
            }
            for (size_t pi = 0; pi < vports.size(); ++pi) {
                const long row = (kept * per_cfg + k) * static_cast<long>(vports.size()) +
                                 static_cast<long>(pi);
                const auto& dofs = ports[static_cast<size_t>(vports[pi])].dofs;
                for (size_t d = 0; d < dofs.size(); ++d)
                    out.vertical.matrix(row, static_cast<Eigen::Index>(d)) = x[dofs[d]];
                out.vertical.provenance[static_cast<size_t>(row)] = {
                    static_cast<int>(c), vports[pi], static_cast<int>(k)};
            }
            for (size_t pi = 0; pi < hports.size(); ++pi) {
                const long row = (kept * per_cfg + k) * static_cast<long>(hports.size()) +
                                 static_cast<long>(pi);
                const auto& dofs = ports[static_cast<size_t>(hports[pi])].dofs;
                for (size_t d = 0; d < dofs.size(); ++d)
                    out.horizontal.matrix(row, static_cast<Eigen::Index>(d)) = x[dofs[d]];
                out.horizontal.provenance[static_cast<size_t>(row)] = {
                    static_cast<int>(c), hports[pi], static_cast<int>(k)};
            }
        }
        ++kept;
        if (verbose && (c % 10 == 9 || c + 1 == n_cfg))
            std::fprintf(stderr, "snapshots: %ld/%ld configs (%ld kept)\n", c + 1,
                         n_cfg, kept);
    }
    if (kept == 0)
        throw std::runtime_error("collect_snapshots: no configuration produced a stable FOM run");
    out.interior.matrix.conservativeResize(kept * per_cfg * layout.n_omega, Eigen::NoChange);
    out.vertical.matrix.conservativeResize(
        kept * per_cfg * static_cast<long>(vports.size()), Eigen::NoChange);
    out.horizontal.matrix.conservativeResize(
        kept * per_cfg * static_cast<long>(hports.size()), Eigen::NoChange);
    out.interior.provenance.resize(static_cast<size_t>(out.interior.matrix.rows()));
    out.vertical.provenance.resize(static_cast<size_t>(out.vertical.matrix.rows()));
    out.horizontal.provenance.resize(static_cast<size_t>(out.horizontal.matrix.rows()));
    return out;
}

std::pair<std::vector<int>, std::vector<int>> split_train_val(
    int rows, double fraction, std::uint64_t seed) {
    if (rows < 2) throw std::invalid_argument("split_train_val: need >= 2 rows");
    return split_indices(rows, fraction, seed);
}

}  // namespace ddrom
