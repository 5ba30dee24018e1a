#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace ddrom {

/// Seeded random permutation split of [0, n): first floor(fraction*n)
/// shuffled indices go to train, the rest to validation.
inline std::pair<std::vector<int>, std::vector<int>> split_indices(
    int n, double fraction, std::uint64_t seed) {
    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    const int n_train = static_cast<int>(fraction * n);
    std::vector<int> train(perm.begin(), perm.begin() + n_train);
    std::vector<int> val(perm.begin() + n_train, perm.end());
    return {std::move(train), std::move(val)};
}

}  // namespace ddrom
