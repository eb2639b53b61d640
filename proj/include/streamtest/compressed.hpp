#pragma once

#include <cstdint>
#include <vector>

#include "streamtest/calibration.hpp"
#include "streamtest/core.hpp"
#include "streamtest/ledger.hpp"

namespace streamtest {

// Memory layout and derived test parameters for the hashed-counts testers.
// When the full histogram already fits the budget (m >= k * counter width)
// the plan degenerates: no partition, a single repetition, and the base
// tester runs on the raw counts.
struct CompressionPlan {
    std::int64_t k_prime = 0;
    double eps_prime = 0.0;
    int repetitions = 1;
    double delta = 0.1;
    bool identity_mode = false;
    std::int64_t segment_length = 0; // samples consumed per repetition
    std::int64_t seed_bits = 0;
    std::int64_t counts_bits = 0;   // induced count array (doubled for closeness)
    std::int64_t counter_bits = 0;  // repetition + accept tallies
};

// Largest k' whose induced counts, partition seed, and amplification
// tallies fit in m; eps' = c1 * sqrt(k'/k) * eps.
CompressionPlan plan_compression(const ProblemParams& params, const CalibrationRecord& record,
                                 bool closeness = false);

// Cache key for the per-repetition base-tester threshold implied by a plan.
ThresholdKey threshold_key_for_plan(const ProblemParams& params, const CompressionPlan& plan, bool closeness);

// Stream length at which the compressed tester is expected to succeed,
// resolved by iterating the plan until the counter width stabilizes
// (the budget splits against log n, which itself depends on n).
std::int64_t recommended_uniformity_length(std::int64_t k, double eps, std::int64_t m,
                                           const CalibrationRecord& record);
std::int64_t recommended_closeness_length(std::int64_t k, double eps, std::int64_t m,
                                          const CalibrationRecord& record);

// Majority-style vote: Accept iff the accept fraction reaches
// 1 - (delta + (1-delta) c2)/2. Requires delta < c2/(1+c2).
Verdict amplify(const std::vector<Verdict>& repetition_verdicts, double delta, double c2);

// One-pass hashed uniformity tester: per repetition, project a fresh
// stream segment through a freshly seeded partition, test the induced
// counts against the exactly induced uniform reference, then vote.
Verdict run_compressed_uniformity(SampleStream& stream, const ProblemParams& params, BitLedger& ledger,
                                  const CalibrationRecord& record, std::uint64_t algo_seed);

// Closeness variant: one shared partition per repetition applied to both
// streams, two induced count arrays, final two-sample statistic.
Verdict run_compressed_closeness(SampleStream& stream_p, SampleStream& stream_q, const ProblemParams& params,
                                 BitLedger& ledger, const CalibrationRecord& record, std::uint64_t algo_seed);

} // namespace streamtest
