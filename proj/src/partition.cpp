#include "streamtest/partition.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "streamtest/rng.hpp"

namespace streamtest {

SeededPermutation::SeededPermutation(std::uint32_t domain, std::uint64_t key) : domain_(domain), key_(key) {
    if (domain < 1) fail(Errc::invalid_argument, "permutation: empty domain");
    const int rounds =
        std::clamp(8 * static_cast<int>(std::bit_width(domain - 1)) + 8, 24, 128);
    round_keys_.resize(static_cast<std::size_t>(rounds));
    for (int r = 0; r < rounds; ++r)
        round_keys_[static_cast<std::size_t>(r)] =
            static_cast<std::uint32_t>(mix64(key + (static_cast<std::uint64_t>(r) + 1) * kGolden) % domain);
}

std::uint32_t SeededPermutation::operator()(std::uint32_t x) const {
    if (x >= domain_) fail(Errc::out_of_range, "permutation: symbol outside domain");
    for (std::size_t r = 0; r < round_keys_.size(); ++r) {
        const std::uint32_t kr = round_keys_[r];
        const std::uint32_t partner = kr >= x ? kr - x : kr + domain_ - x;
        const std::uint32_t hi = std::max(x, partner);
        // One keyed bit per unordered pair per round decides the swap.
        if (mix64(key_ ^ ((static_cast<std::uint64_t>(r) << 32) | hi)) & 1u) x = partner;
    }
    return x;
}

Partition::Partition(std::int64_t k, std::int64_t k_prime, std::uint64_t seed)
    : k_(k), k_prime_(k_prime), seed_(seed), perm_(static_cast<std::uint32_t>(k), mix64(seed ^ 0x5851F42D4C957F2DULL)),
      big_cells_(k % k_prime), base_size_(k / k_prime) {
    if (k_prime < 2 || k_prime > k)
        fail(Errc::out_of_range, "partition: require 2 <= k' <= k");
}

std::uint32_t Partition::cell_of(std::uint32_t x) const {
    if (x >= static_cast<std::uint64_t>(k_)) fail(Errc::out_of_range, "partition: symbol outside [k]");
    const std::int64_t y = perm_(x);
    const std::int64_t big_span = big_cells_ * (base_size_ + 1);
    if (y < big_span) return static_cast<std::uint32_t>(y / (base_size_ + 1));
    return static_cast<std::uint32_t>(big_cells_ + (y - big_span) / base_size_);
}

std::int64_t Partition::cell_size(std::int64_t c) const {
    if (c < 0 || c >= k_prime_) fail(Errc::out_of_range, "partition: cell index out of range");
    return c < big_cells_ ? base_size_ + 1 : base_size_;
}

Partition sample_partition(std::int64_t k, std::int64_t k_prime, std::uint64_t seed) {
    return Partition(k, k_prime, seed);
}

std::vector<std::uint32_t> cell_table(const Partition& pi) {
    std::vector<std::uint32_t> table(static_cast<std::size_t>(pi.k()));
    for (std::size_t x = 0; x < table.size(); ++x) table[x] = pi.cell_of(static_cast<std::uint32_t>(x));
    return table;
}

Pmf induce_pmf(const Pmf& p, const Partition& pi) {
    if (p.size() != pi.k()) fail(Errc::length_mismatch, "induce_pmf: pmf length != partition domain");
    Pmf out = Pmf::Zero(pi.k_prime());
    for (Eigen::Index i = 0; i < p.size(); ++i) out[pi.cell_of(static_cast<std::uint32_t>(i))] += p[i];
    return out;
}

Pmf induce_pmf(const Pmf& p, const std::vector<std::uint32_t>& cell_of) {
    if (static_cast<std::size_t>(p.size()) != cell_of.size())
        fail(Errc::length_mismatch, "induce_pmf: pmf length != cell map length");
    const std::uint32_t k_prime = *std::max_element(cell_of.begin(), cell_of.end()) + 1;
    Pmf out = Pmf::Zero(k_prime);
    for (Eigen::Index i = 0; i < p.size(); ++i) out[cell_of[static_cast<std::size_t>(i)]] += p[i];
    return out;
}

Pmf induced_uniform_reference(const Partition& pi) {
    Pmf out(pi.k_prime());
    for (std::int64_t c = 0; c < pi.k_prime(); ++c)
        out[c] = static_cast<double>(pi.cell_size(c)) / static_cast<double>(pi.k());
    return out;
}

double balanced_partition_count(std::int64_t k, std::int64_t k_prime) {
    if (k_prime < 2 || k_prime > k) fail(Errc::out_of_range, "balanced_partition_count: require 2 <= k' <= k");
    const std::int64_t big = k % k_prime;
    const std::int64_t small = k_prime - big;
    const std::int64_t q = k / k_prime;
    // k! / ( (q+1)!^big * q!^small * big! * small! )
    double log_count = std::lgamma(static_cast<double>(k) + 1.0);
    log_count -= static_cast<double>(big) * std::lgamma(static_cast<double>(q) + 2.0);
    log_count -= static_cast<double>(small) * std::lgamma(static_cast<double>(q) + 1.0);
    log_count -= std::lgamma(static_cast<double>(big) + 1.0);
    log_count -= std::lgamma(static_cast<double>(small) + 1.0);
    return std::round(std::exp(log_count));
}

namespace {

void enumerate_rec(std::int64_t k, std::vector<std::int64_t>& capacity, std::vector<std::int64_t>& fill,
                   std::vector<std::uint32_t>& assign, std::size_t next, std::size_t limit,
                   std::vector<std::vector<std::uint32_t>>& out) {
    if (next == static_cast<std::size_t>(k)) {
        if (out.size() >= limit) fail(Errc::out_of_range, "enumerate_balanced_partitions: limit exceeded");
        out.push_back(assign);
        return;
    }
    for (std::size_t c = 0; c < capacity.size(); ++c) {
        if (fill[c] >= capacity[c]) continue;
        // Unordered cells: within a size class, cells must be opened in order.
        if (fill[c] == 0 && c > 0 && capacity[c - 1] == capacity[c] && fill[c - 1] == 0) continue;
        assign[next] = static_cast<std::uint32_t>(c);
        ++fill[c];
        enumerate_rec(k, capacity, fill, assign, next + 1, limit, out);
        --fill[c];
    }
}

} // namespace

std::vector<std::vector<std::uint32_t>> enumerate_balanced_partitions(std::int64_t k, std::int64_t k_prime,
                                                                      std::size_t limit) {
    if (k_prime < 2 || k_prime > k)
        fail(Errc::out_of_range, "enumerate_balanced_partitions: require 2 <= k' <= k");
    const std::int64_t big = k % k_prime;
    std::vector<std::int64_t> capacity(static_cast<std::size_t>(k_prime), k / k_prime);
    for (std::int64_t c = 0; c < big; ++c) ++capacity[static_cast<std::size_t>(c)];
    std::vector<std::int64_t> fill(capacity.size(), 0);
    std::vector<std::uint32_t> assign(static_cast<std::size_t>(k), 0);
    std::vector<std::vector<std::uint32_t>> out;
    enumerate_rec(k, capacity, fill, assign, 0, limit, out);
    return out;
}

ContractionResult contraction_probability_oracle(const Pmf& p, const Pmf& q, std::int64_t k_prime,
                                                 std::int64_t trials, std::uint64_t seed, double c1,
                                                 bool force_sampling) {
    if (p.size() != q.size()) fail(Errc::length_mismatch, "contraction oracle: length mismatch");
    const std::int64_t k = p.size();
    const double tv = tv_distance(p, q);
    if (!(tv > 0.0)) fail(Errc::invalid_argument, "contraction oracle: requires TV(p,q) > 0");
    const double bar =
        c1 * std::sqrt(static_cast<double>(k_prime) / static_cast<double>(k)) * tv - 1e-12;

    constexpr std::size_t kEnumerationCap = 200000;
    if (!force_sampling && balanced_partition_count(k, k_prime) <= static_cast<double>(kEnumerationCap)) {
        const auto all = enumerate_balanced_partitions(k, k_prime, kEnumerationCap);
        std::int64_t hits = 0;
        for (const auto& cell_of : all) {
            const Pmf p_pi = induce_pmf(p, cell_of);
            const Pmf q_pi = induce_pmf(q, cell_of);
            if (tv_distance(p_pi, q_pi) >= bar) ++hits;
        }
        return {static_cast<double>(hits) / static_cast<double>(all.size()),
                static_cast<std::int64_t>(all.size()), true};
    }

    std::int64_t hits = 0;
    for (std::int64_t t = 0; t < trials; ++t) {
        const Partition pi(k, k_prime, derive_seed(seed, static_cast<std::uint64_t>(t)));
        const auto cells = cell_table(pi);
        const Pmf p_pi = induce_pmf(p, cells);
        const Pmf q_pi = induce_pmf(q, cells);
        if (tv_distance(p_pi, q_pi) >= bar) ++hits;
    }
    return {static_cast<double>(hits) / static_cast<double>(trials), trials, false};
}

} // namespace streamtest
