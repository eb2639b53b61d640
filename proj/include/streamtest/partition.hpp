#pragma once

#include <cstdint>
#include <vector>

#include "streamtest/core.hpp"

namespace streamtest {

// Keyed bijection on [0, domain) via the swap-or-not shuffle: each round
// pairs x with (K_r - x) mod domain and swaps on a keyed bit of the pair.
// Works on the exact domain, mixes to near-uniform in O(log domain) rounds,
// and needs only the key to evaluate.
class SeededPermutation {
public:
    SeededPermutation(std::uint32_t domain, std::uint64_t key);

    std::uint32_t operator()(std::uint32_t x) const;
    std::uint32_t domain() const { return domain_; }

private:
    std::uint32_t domain_;
    std::uint64_t key_;
    std::vector<std::uint32_t> round_keys_;
};

// Balanced partition of [k] into k' cells, derived from a compact seed:
// a seeded pseudorandom permutation of [k] chopped into consecutive blocks
// whose sizes differ by at most one. Reproducible from (k, k', seed).
class Partition {
public:
    Partition(std::int64_t k, std::int64_t k_prime, std::uint64_t seed);

    std::int64_t k() const { return k_; }
    std::int64_t k_prime() const { return k_prime_; }
    std::uint64_t seed() const { return seed_; }

    // Cell index of symbol x; O(1) beyond the stored seed.
    std::uint32_t cell_of(std::uint32_t x) const;

    // Number of source symbols in cell c (q or q+1).
    std::int64_t cell_size(std::int64_t c) const;

private:
    std::int64_t k_;
    std::int64_t k_prime_;
    std::uint64_t seed_;
    SeededPermutation perm_;
    std::int64_t big_cells_; // k mod k' cells hold one extra element
    std::int64_t base_size_; // floor(k / k')
};

Partition sample_partition(std::int64_t k, std::int64_t k_prime, std::uint64_t seed);

inline std::uint32_t project(const Partition& pi, std::uint32_t x) { return pi.cell_of(x); }

// cell_of evaluated over all of [k]. Pure expansion of the seed; the hot
// loops project through this instead of re-evaluating the permutation.
std::vector<std::uint32_t> cell_table(const Partition& pi);

// Exact cell sums of `p` under `pi`.
Pmf induce_pmf(const Pmf& p, const Partition& pi);
Pmf induce_pmf(const Pmf& p, const std::vector<std::uint32_t>& cell_of);

// Cell masses of the uniform source: cell_size / k. The reference the
// compressed testers compare against, exactly uniform when k' divides k.
Pmf induced_uniform_reference(const Partition& pi);

// Number of set partitions of [k] into balanced cells (unordered within
// each size class); returned as double, +inf on overflow.
double balanced_partition_count(std::int64_t k, std::int64_t k_prime);

// All balanced partitions of [k] into k' unordered cells, each encoded as a
// cell_of vector. Fails if the count exceeds `limit`.
std::vector<std::vector<std::uint32_t>> enumerate_balanced_partitions(std::int64_t k, std::int64_t k_prime,
                                                                      std::size_t limit);

struct ContractionResult {
    double probability = 0.0; // fraction of partitions with TV(p_pi, q_pi) >= c1 sqrt(k'/k) TV(p,q)
    std::int64_t trials = 0;
    bool exact = false; // true when every balanced partition was enumerated
};

// Empirical (or exhaustive, for small instances) probability that a random
// balanced partition contracts the TV distance by no more than the factor
// c1 * sqrt(k'/k). Requires TV(p, q) > 0.
ContractionResult contraction_probability_oracle(const Pmf& p, const Pmf& q, std::int64_t k_prime,
                                                 std::int64_t trials, std::uint64_t seed, double c1,
                                                 bool force_sampling = false);

} // namespace streamtest
