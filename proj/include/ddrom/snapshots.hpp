#pragma once

#include "ddrom/autoencoder.hpp"
#include "ddrom/partition.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ddrom {

struct SampleConfig {
    int M = 1;
    double gamma_lo = 0.5;
    double gamma_hi = 1.5;
    double bernoulli_p = 0.5;
    bool force_xi0 = true;  // bottom-left subdomain always active
    std::uint64_t seed = 0;
};

/// Latin-hypercube gamma samples times Bernoulli on/off switches,
/// mu_i = gamma_i * xi_i.
std::vector<Vec> lhs_sample(const SampleConfig& cfg, int n_omega);

enum class SnapshotRole : std::int32_t { Interior = 0, VerticalPort = 1, HorizontalPort = 2 };

struct SnapshotProvenance {
    int config_index;
    int entity_id;  // subdomain id or port id
    int time_index;
};

struct SnapshotSet {
    SnapshotRole role;
    RowMat matrix;  // one snapshot per row
    std::vector<SnapshotProvenance> provenance;
};

struct SnapshotBundle {
    SnapshotSet interior;
    SnapshotSet vertical;
    SnapshotSet horizontal;
    // Configurations dropped because their full-order solve was unstable
    // at this resolution (non-converged, non-finite, or blown-up states).
    std::vector<int> skipped_configs;
};

/// Offline stage: monolithic FOM solves for every configuration, gathering
/// interior and edge-port state rows at every stored time index
/// (k = 0..Nt). Corner ports stay full order and are not collected.
/// Unstable configurations are skipped and reported in skipped_configs;
/// throws only if none survive.
SnapshotBundle collect_snapshots(const std::vector<Vec>& configs,
                                 const Grid2D& grid,
                                 const SubdomainLayout& layout,
                                 const StateMaps& maps,
                                 const BurgersParams& params,
                                 bool verbose = false);

/// Seeded permutation split of snapshot rows (train indices, val indices).
std::pair<std::vector<int>, std::vector<int>> split_train_val(
    int rows, double fraction, std::uint64_t seed);

}  // namespace ddrom
