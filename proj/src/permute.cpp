#include "hts/permute.hpp"

#include "hts/errors.hpp"
#include "hts/rng.hpp"

namespace hts {

namespace {

void check_permutation(const std::vector<int>& perm, int m) {
    if (static_cast<int>(perm.size()) != m) {
        throw ArgumentError("permutation has " + std::to_string(perm.size()) + " entries, expected " +
                            std::to_string(m));
    }
    std::vector<char> seen(static_cast<size_t>(m), 0);
    for (int p : perm) {
        if (p < 0 || p >= m || seen[static_cast<size_t>(p)]) {
            throw ArgumentError("not a permutation of 0.." + std::to_string(m - 1));
        }
        seen[static_cast<size_t>(p)] = 1;
    }
}

} // namespace

Grouping twin(const Grouping& g, const std::vector<int>& perm) {
    check_permutation(perm, g.m());
    if (g.rows() == 0) {
        return g;
    }
    Eigen::MatrixXd c(g.rows(), g.m());
    for (int j = 0; j < g.m(); ++j) {
        c.col(j) = g.matrix().col(perm[static_cast<size_t>(j)]);
    }
    return Grouping(std::move(c), g.middle_ids());
}

std::vector<int> inverse_permutation(const std::vector<int>& perm) {
    check_permutation(perm, static_cast<int>(perm.size()));
    std::vector<int> inv(perm.size());
    for (size_t j = 0; j < perm.size(); ++j) {
        inv[static_cast<size_t>(perm[j])] = static_cast<int>(j);
    }
    return inv;
}

std::vector<std::vector<int>> twin_permutations(int m, int count, std::uint64_t seed) {
    if (count < 1) {
        throw ArgumentError("twin count must be at least 1");
    }
    std::vector<std::vector<int>> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, "twin", static_cast<std::uint64_t>(i)));
        out.push_back(rng.permutation(m));
    }
    return out;
}

std::vector<Grouping> twin_batch(const Grouping& g, int count, std::uint64_t seed) {
    std::vector<Grouping> out;
    for (const auto& p : twin_permutations(g.m(), count, seed)) {
        out.push_back(twin(g, p));
    }
    return out;
}

std::vector<std::vector<Grouping>> twin_batch(const std::vector<Grouping>& groupings, int count, std::uint64_t seed) {
    if (groupings.empty()) {
        throw ArgumentError("twin_batch needs at least one grouping");
    }
    const int m = groupings.front().m();
    for (const auto& g : groupings) {
        if (g.m() != m) {
            throw ArgumentError("twin_batch: groupings cover different numbers of bottom series");
        }
    }
    std::vector<std::vector<Grouping>> out;
    for (const auto& p : twin_permutations(m, count, seed)) {
        std::vector<Grouping> set;
        for (const auto& g : groupings) {
            set.push_back(twin(g, p));
        }
        out.push_back(std::move(set));
    }
    return out;
}

} // namespace hts
