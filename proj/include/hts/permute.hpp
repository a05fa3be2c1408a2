#pragma once

#include "hts/panel.hpp"

#include <cstdint>
#include <vector>

namespace hts {

/// C'[:, j] = C[:, perm[j]] with a 0-based permutation. Middle ids are kept.
Grouping twin(const Grouping& g, const std::vector<int>& perm);

std::vector<int> inverse_permutation(const std::vector<int>& perm);

/// `count` uniform permutations of 0..m-1; permutation i is drawn from the
/// substream derive_seed(seed, "twin", i).
std::vector<std::vector<int>> twin_permutations(int m, int count, std::uint64_t seed);

std::vector<Grouping> twin_batch(const Grouping& g, int count, std::uint64_t seed);

/// Twins of a set of groupings sharing one permutation per twin: result[i][j]
/// is twin i of groupings[j].
std::vector<std::vector<Grouping>> twin_batch(const std::vector<Grouping>& groupings, int count, std::uint64_t seed);

} // namespace hts
