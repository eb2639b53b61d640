#pragma once

#include <cstdint>
#include <optional>

#include "streamtest/core.hpp"
#include "streamtest/ledger.hpp"

namespace streamtest {

enum class BatchRegime { SmallS, LargeS };

// Batch layout derived from the bit budget: s samples per batch, T batches.
struct BatchPlan {
    std::int64_t s = 0;
    std::int64_t T = 0;
    BatchRegime regime = BatchRegime::SmallS;
};

// Largest s with s*ceil(log2 k) plus the accumulator reserve within m,
// floored at 1; T = floor(n/s). The regime is SmallS iff s <= k. When the
// small-regime formula lands above k, s is re-derived against the wider
// large-regime accumulator (bits_for_counter(2 n k)).
BatchPlan plan_batches(const ProblemParams& params);

// Exact statistic value num/den.
struct RationalStat {
    std::int64_t num = 0;
    std::int64_t den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

bool rational_equal(const RationalStat& a, const RationalStat& b);

// Z = (1/k) * #unseen symbols, as (num = k*Z, den = k); requires total <= k.
RationalStat unseen_statistic(const Counts& counts, std::int64_t k);

// Z = (1/2) sum |N_i/s - 1/k|, as (num = sum |N_i*k - s|, den = 2*s*k);
// requires total == s >= 1. Equals unseen_statistic whenever s <= k.
RationalStat empirical_tv_statistic(const Counts& counts, std::int64_t s, std::int64_t k);

// Worst-case expectation gap s^2 eps^2 / (4 e k^2) for s <= k.
double expectation_gap(std::int64_t s, std::int64_t k, double eps);

// Decision threshold (1 - 1/k)^s + s^2 eps^2 / (8 e k^2) for s <= k.
double threshold_small(std::int64_t s, std::int64_t k, double eps);

// Batches needed for Chebyshev error <= 1/3: ceil(1536 e^2 k / (s^2 eps^4)).
std::int64_t required_batches(std::int64_t s, std::int64_t k, double eps);

// Large-batch expectation gap used beyond s > k:
// gap_constant * min(eps^2 sqrt(s/k), eps).
double large_s_gap(std::int64_t s, std::int64_t k, double eps, double gap_constant);

// Threshold for the large-batch regime: exact null mean plus half the gap.
double threshold_large(std::int64_t s, std::int64_t k, double eps, double gap_constant);

// One-pass batched tester. Buffers one batch at a time on the ledger,
// accumulates an integer statistic across batches, thresholds the average.
// Ties accept; only a strict excess rejects. `large_s_gap_constant` is
// required only when the plan lands in the large-batch regime.
Verdict run_batch_tester(SampleStream& stream, const ProblemParams& params, BitLedger& ledger,
                         std::optional<BatchPlan> plan_override = std::nullopt,
                         std::optional<double> large_s_gap_constant = std::nullopt);

} // namespace streamtest
