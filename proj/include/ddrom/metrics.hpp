#pragma once

#include "ddrom/partition.hpp"

#include <vector>

namespace ddrom {

struct ErrorReport {
    double e_abs = 0.0;  // discrete Linf-L2 metric
    double e_rel = 0.0;  // e_abs / metric(FOM vs zero trajectory)
    std::vector<double> per_step;
};

/// Discrete Linf-L2 error between two aligned monolithic trajectories:
/// max over steps of sqrt( h_x h_y / n_Omega * sum_i (||dx_i^Omega||^2 +
/// ||dx_i^Gamma||^2) ). Shared interface copies are counted once per
/// sharing subdomain.
ErrorReport linf_l2_error(const std::vector<Vec>& fom_traj,
                          const std::vector<Vec>& rom_traj,
                          const SubdomainStateMap& map, const Grid2D& grid,
                          int n_omega);

struct TimingRecord {
    double local_total = 0.0;   // max-over-subdomains work, summed over steps
    double global_total = 0.0;  // synchronized phases
    double total() const { return local_total + global_total; }
};

double speedup(const TimingRecord& fom, const TimingRecord& rom);

}  // namespace ddrom
