#include "streamtest/compressed.hpp"

#include <algorithm>
#include <cmath>

#include "streamtest/base_testers.hpp"
#include "streamtest/partition.hpp"
#include "streamtest/rng.hpp"

namespace streamtest {

namespace {

CompressionPlan plan_for_length(std::int64_t k, double eps, std::int64_t m, std::int64_t n,
                                const CalibrationRecord& rec, bool closeness) {
    CompressionPlan plan;
    plan.delta = rec.delta;
    const std::int64_t cps = bits_for_counter(static_cast<std::uint64_t>(n));

    if (!closeness && k * cps <= m) {
        plan.identity_mode = true;
        plan.k_prime = k;
        plan.eps_prime = rec.c1 * eps;
        plan.repetitions = 1;
        plan.segment_length = n;
        plan.counts_bits = k * cps;
        return plan;
    }

    const int reps = compute_repetitions(rec.delta, rec.c2_amp); // validates the gap
    plan.repetitions = reps;
    plan.seed_bits = ceil_log2(static_cast<std::uint64_t>(k));
    plan.counter_bits = 2 * bits_for_counter(static_cast<std::uint64_t>(reps));
    const std::int64_t width = (closeness ? 2 : 1) * cps;
    const std::int64_t k_prime = std::min<std::int64_t>(k, (m - plan.seed_bits - plan.counter_bits) / width);
    if (k_prime < 2)
        fail(Errc::regime_too_small,
             "plan_compression: budget cannot hold two induced counters (k' = " + std::to_string(k_prime) + ")");
    plan.k_prime = k_prime;
    plan.eps_prime = rec.c1 * std::sqrt(static_cast<double>(k_prime) / static_cast<double>(k)) * eps;
    plan.counts_bits = (closeness ? 2 : 1) * k_prime * cps;
    plan.segment_length = n / reps;
    if (plan.segment_length < 1) fail(Errc::invalid_argument, "plan_compression: stream shorter than one repetition");
    return plan;
}

double identity_samples(std::int64_t k_prime, double eps_prime, double c4) {
    return c4 * std::sqrt(static_cast<double>(k_prime)) / (eps_prime * eps_prime);
}

double closeness_samples(std::int64_t k_prime, double eps_prime, double c4) {
    const double kd = static_cast<double>(k_prime);
    return c4 * (std::sqrt(kd) / (eps_prime * eps_prime) +
                 std::pow(kd, 2.0 / 3.0) / std::pow(eps_prime, 4.0 / 3.0));
}

std::int64_t fixed_point_length(std::int64_t k, double eps, std::int64_t m, const CalibrationRecord& rec,
                                bool closeness) {
    const double c4 = closeness ? rec.c4_closeness : rec.c4_identity;
    double start = closeness ? closeness_samples(k, eps, c4) : identity_samples(k, eps, c4);
    std::int64_t n = static_cast<std::int64_t>(std::ceil(start));
    for (int iter = 0; iter < 6; ++iter) {
        const CompressionPlan plan = plan_for_length(k, eps, m, std::max<std::int64_t>(n, 2), rec, closeness);
        const double per_test = closeness ? closeness_samples(plan.k_prime, plan.eps_prime, c4)
                                          : identity_samples(plan.k_prime, plan.eps_prime, c4);
        const std::int64_t n_next =
            static_cast<std::int64_t>(plan.repetitions) * static_cast<std::int64_t>(std::ceil(per_test));
        if (n_next == n) break;
        n = n_next;
    }
    return n;
}

} // namespace

CompressionPlan plan_compression(const ProblemParams& params, const CalibrationRecord& record, bool closeness) {
    const ProblemParams p = validate_params(params);
    return plan_for_length(p.k, p.eps, p.m, p.n, record, closeness);
}

ThresholdKey threshold_key_for_plan(const ProblemParams& params, const CompressionPlan& plan, bool closeness) {
    ThresholdKey key;
    key.statistic = closeness ? "closeness" : "identity_chi2";
    key.k = plan.k_prime;
    key.eps = plan.eps_prime;
    key.delta = plan.delta;
    key.n = plan.segment_length;
    key.ref = plan.identity_mode ? "uniform" : "balanced:" + std::to_string(params.k);
    return key;
}

std::int64_t recommended_uniformity_length(std::int64_t k, double eps, std::int64_t m,
                                           const CalibrationRecord& record) {
    return fixed_point_length(k, eps, m, record, false);
}

std::int64_t recommended_closeness_length(std::int64_t k, double eps, std::int64_t m,
                                          const CalibrationRecord& record) {
    return fixed_point_length(k, eps, m, record, true);
}

Verdict amplify(const std::vector<Verdict>& repetition_verdicts, double delta, double c2) {
    if (repetition_verdicts.empty()) fail(Errc::invalid_argument, "amplify: no verdicts");
    if (!(delta < c2 / (1.0 + c2)))
        fail(Errc::invalid_argument, "amplify: no gap, requires delta < c2/(1+c2)");
    const double threshold = 1.0 - (delta + (1.0 - delta) * c2) / 2.0;
    const auto accepts = static_cast<double>(
        std::count(repetition_verdicts.begin(), repetition_verdicts.end(), Verdict::Accept));
    const double rate = accepts / static_cast<double>(repetition_verdicts.size());
    return rate >= threshold ? Verdict::Accept : Verdict::Reject;
}

Verdict run_compressed_uniformity(SampleStream& stream, const ProblemParams& params, BitLedger& ledger,
                                  const CalibrationRecord& record, std::uint64_t algo_seed) {
    const ProblemParams p = validate_params(params);
    const CompressionPlan plan = plan_compression(p, record, false);
    const double threshold = record.threshold_for(threshold_key_for_plan(p, plan, false));
    const TesterConfig config{plan.k_prime, plan.eps_prime, plan.delta, threshold};

    if (stream.remaining() < static_cast<std::int64_t>(plan.repetitions) * plan.segment_length)
        fail(Errc::stream_exhausted, "run_compressed_uniformity: stream too short for the plan");

    if (plan.identity_mode) {
        ledger.charge("induced_counts", plan.counts_bits);
        const Counts counts = histogram_from_stream(stream, plan.segment_length, p.k);
        const Verdict verdict = identity_chi2_test(counts, make_uniform(p.k), config);
        ledger.release("induced_counts");
        return verdict;
    }

    ledger.charge("repetition_counter", bits_for_counter(static_cast<std::uint64_t>(plan.repetitions)));
    ledger.charge("accept_counter", bits_for_counter(static_cast<std::uint64_t>(plan.repetitions)));
    std::vector<Verdict> verdicts;
    verdicts.reserve(static_cast<std::size_t>(plan.repetitions));
    Counts counts;
    for (int r = 0; r < plan.repetitions; ++r) {
        ledger.charge("partition_seed", plan.seed_bits);
        const Partition pi(p.k, plan.k_prime, derive_seed(algo_seed, static_cast<std::uint64_t>(r)));
        const std::vector<std::uint32_t> cells = cell_table(pi);
        ledger.charge("induced_counts", plan.counts_bits);
        counts.freq = CountVec::Zero(plan.k_prime);
        for (std::int64_t i = 0; i < plan.segment_length; ++i) ++counts.freq[cells[stream.next()]];
        counts.total = plan.segment_length;
        verdicts.push_back(identity_chi2_test(counts, induced_uniform_reference(pi), config));
        ledger.release("induced_counts");
        ledger.release("partition_seed");
    }
    const Verdict verdict = amplify(verdicts, plan.delta, record.c2_amp);
    ledger.release("accept_counter");
    ledger.release("repetition_counter");
    return verdict;
}

Verdict run_compressed_closeness(SampleStream& stream_p, SampleStream& stream_q, const ProblemParams& params,
                                 BitLedger& ledger, const CalibrationRecord& record, std::uint64_t algo_seed) {
    const ProblemParams p = validate_params(params);
    if (stream_p.length() != stream_q.length())
        fail(Errc::length_mismatch, "run_compressed_closeness: stream lengths differ");
    const CompressionPlan plan = plan_compression(p, record, true);
    const double threshold = record.threshold_for(threshold_key_for_plan(p, plan, true));
    const TesterConfig config{plan.k_prime, plan.eps_prime, plan.delta, threshold};

    if (stream_p.remaining() < static_cast<std::int64_t>(plan.repetitions) * plan.segment_length ||
        stream_q.remaining() < static_cast<std::int64_t>(plan.repetitions) * plan.segment_length)
        fail(Errc::stream_exhausted, "run_compressed_closeness: streams too short for the plan");

    ledger.charge("repetition_counter", bits_for_counter(static_cast<std::uint64_t>(plan.repetitions)));
    ledger.charge("accept_counter", bits_for_counter(static_cast<std::uint64_t>(plan.repetitions)));
    std::vector<Verdict> verdicts;
    verdicts.reserve(static_cast<std::size_t>(plan.repetitions));
    Counts counts_p, counts_q;
    for (int r = 0; r < plan.repetitions; ++r) {
        ledger.charge("partition_seed", plan.seed_bits);
        const Partition pi(p.k, plan.k_prime, derive_seed(algo_seed, static_cast<std::uint64_t>(r)));
        const std::vector<std::uint32_t> cells = cell_table(pi);
        ledger.charge("induced_counts", plan.counts_bits);
        counts_p.freq = CountVec::Zero(plan.k_prime);
        counts_q.freq = CountVec::Zero(plan.k_prime);
        for (std::int64_t i = 0; i < plan.segment_length; ++i) {
            ++counts_p.freq[cells[stream_p.next()]];
            ++counts_q.freq[cells[stream_q.next()]];
        }
        counts_p.total = plan.segment_length;
        counts_q.total = plan.segment_length;
        verdicts.push_back(closeness_test(counts_p, counts_q, config));
        ledger.release("induced_counts");
        ledger.release("partition_seed");
    }
    const Verdict verdict = amplify(verdicts, plan.delta, record.c2_amp);
    ledger.release("accept_counter");
    ledger.release("repetition_counter");
    return verdict;
}

} // namespace streamtest
