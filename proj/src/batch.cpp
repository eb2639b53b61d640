#include "streamtest/batch.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "streamtest/moments.hpp"

namespace streamtest {

BatchPlan plan_batches(const ProblemParams& params) {
    const ProblemParams p = validate_params(params);
    const std::int64_t log_k = ceil_log2(static_cast<std::uint64_t>(p.k));
    const std::int64_t small_reserve =
        bits_for_counter(static_cast<std::uint64_t>(p.n)) + bits_for_counter(static_cast<std::uint64_t>(p.k));

    std::int64_t s = (p.m - small_reserve) / log_k;
    if (s < 1) s = 1;
    BatchRegime regime = BatchRegime::SmallS;
    if (s > p.k) {
        // Large batches keep a wider accumulator; re-derive s against it.
        const std::int64_t large_reserve = bits_for_counter(2 * static_cast<std::uint64_t>(p.n) *
                                                            static_cast<std::uint64_t>(p.k));
        const std::int64_t s_large = (p.m - large_reserve) / log_k;
        if (s_large > p.k) {
            s = s_large;
            regime = BatchRegime::LargeS;
        } else {
            s = p.k;
        }
    }
    if (s > p.n) s = p.n;
    const std::int64_t T = p.n / s;
    if (T < 1) fail(Errc::invalid_argument, "plan_batches: stream shorter than one batch");
    return {s, T, regime};
}

bool rational_equal(const RationalStat& a, const RationalStat& b) {
    return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
}

RationalStat unseen_statistic(const Counts& counts, std::int64_t k) {
    if (counts.freq.size() != k) fail(Errc::length_mismatch, "unseen_statistic: counts length != k");
    if (counts.total > k) fail(Errc::invalid_argument, "unseen_statistic: total > k");
    const std::int64_t unseen = (counts.freq.array() == 0).count();
    return {unseen, k};
}

RationalStat empirical_tv_statistic(const Counts& counts, std::int64_t s, std::int64_t k) {
    if (counts.freq.size() != k) fail(Errc::length_mismatch, "empirical_tv_statistic: counts length != k");
    if (counts.total != s) fail(Errc::invalid_argument, "empirical_tv_statistic: total != s");
    if (s < 1) fail(Errc::invalid_argument, "empirical_tv_statistic: s must be >= 1");
    std::int64_t num = 0;
    for (Eigen::Index i = 0; i < counts.freq.size(); ++i) num += std::abs(counts.freq[i] * k - s);
    return {num, 2 * s * k};
}

double expectation_gap(std::int64_t s, std::int64_t k, double eps) {
    if (s > k) fail(Errc::invalid_argument, "expectation_gap: requires s <= k");
    const double sd = static_cast<double>(s), kd = static_cast<double>(k);
    return sd * sd * eps * eps / (4.0 * M_E * kd * kd);
}

double threshold_small(std::int64_t s, std::int64_t k, double eps) {
    if (s > k) fail(Errc::invalid_argument, "threshold_small: requires s <= k");
    const double sd = static_cast<double>(s), kd = static_cast<double>(k);
    return std::pow(1.0 - 1.0 / kd, sd) + sd * sd * eps * eps / (8.0 * M_E * kd * kd);
}

std::int64_t required_batches(std::int64_t s, std::int64_t k, double eps) {
    if (s < 1) fail(Errc::invalid_argument, "required_batches: s must be >= 1");
    const double sd = static_cast<double>(s), kd = static_cast<double>(k);
    const double t = 1536.0 * M_E * M_E * kd / (sd * sd * eps * eps * eps * eps);
    return static_cast<std::int64_t>(std::ceil(t));
}

double large_s_gap(std::int64_t s, std::int64_t k, double eps, double gap_constant) {
    const double sd = static_cast<double>(s), kd = static_cast<double>(k);
    return gap_constant * std::min(eps * eps * std::sqrt(sd / kd), eps);
}

double threshold_large(std::int64_t s, std::int64_t k, double eps, double gap_constant) {
    return expected_empirical_tv_uniform(s, k) + 0.5 * large_s_gap(s, k, eps, gap_constant);
}

namespace {

// Unseen count of a batch, via in-place sort of the sample buffer.
std::int64_t unseen_from_buffer(std::vector<std::uint32_t>& buf, std::int64_t k) {
    std::sort(buf.begin(), buf.end());
    std::int64_t distinct = 0;
    for (std::size_t i = 0; i < buf.size(); ++i)
        if (i == 0 || buf[i] != buf[i - 1]) ++distinct;
    return k - distinct;
}

// sum_i |N_i * k - s| from a sorted batch: seen symbols contribute their
// run-length term, unseen symbols contribute s each.
std::int64_t abs_dev_from_buffer(std::vector<std::uint32_t>& buf, std::int64_t k) {
    std::sort(buf.begin(), buf.end());
    const std::int64_t s = static_cast<std::int64_t>(buf.size());
    std::int64_t total = 0;
    std::int64_t distinct = 0;
    std::size_t i = 0;
    while (i < buf.size()) {
        std::size_t j = i;
        while (j < buf.size() && buf[j] == buf[i]) ++j;
        const std::int64_t run = static_cast<std::int64_t>(j - i);
        total += std::abs(run * k - s);
        ++distinct;
        i = j;
    }
    total += (k - distinct) * s;
    return total;
}

} // namespace

Verdict run_batch_tester(SampleStream& stream, const ProblemParams& params, BitLedger& ledger,
                         std::optional<BatchPlan> plan_override, std::optional<double> large_s_gap_constant) {
    const ProblemParams p = validate_params(params);
    const BatchPlan plan = plan_override ? *plan_override : plan_batches(p);
    if (plan.s < 1 || plan.T < 1) fail(Errc::invalid_argument, "run_batch_tester: degenerate plan");
    if (stream.remaining() < plan.s * plan.T)
        fail(Errc::stream_exhausted, "run_batch_tester: stream shorter than s*T");

    const std::int64_t buffer_bits = plan.s * ceil_log2(static_cast<std::uint64_t>(p.k));
    std::vector<std::uint32_t> buffer(static_cast<std::size_t>(plan.s));

    if (plan.regime == BatchRegime::SmallS) {
        ledger.charge("z_accumulator",
                      bits_for_counter(static_cast<std::uint64_t>(plan.T) * static_cast<std::uint64_t>(p.k)));
        std::int64_t scaled_sum = 0; // sum of k * Z_t, an integer in {0..T*k}
        for (std::int64_t t = 0; t < plan.T; ++t) {
            ledger.charge("sample_buffer", buffer_bits);
            for (std::int64_t i = 0; i < plan.s; ++i) buffer[static_cast<std::size_t>(i)] = stream.next();
            scaled_sum += unseen_from_buffer(buffer, p.k);
            ledger.release("sample_buffer");
        }
        ledger.release("z_accumulator");
        const long double mean = static_cast<long double>(scaled_sum) /
                                 (static_cast<long double>(plan.T) * static_cast<long double>(p.k));
        return mean > static_cast<long double>(threshold_small(plan.s, p.k, p.eps)) ? Verdict::Reject
                                                                                    : Verdict::Accept;
    }

    if (!large_s_gap_constant)
        fail(Errc::calibration_missing, "run_batch_tester: large-batch regime needs a calibrated gap constant");
    ledger.charge("abs_dev_accumulator", bits_for_counter(2 * static_cast<std::uint64_t>(p.n) *
                                                          static_cast<std::uint64_t>(p.k)));
    std::int64_t abs_dev_sum = 0; // sum over batches of sum_i |N_i*k - s|
    for (std::int64_t t = 0; t < plan.T; ++t) {
        ledger.charge("sample_buffer", buffer_bits);
        for (std::int64_t i = 0; i < plan.s; ++i) buffer[static_cast<std::size_t>(i)] = stream.next();
        abs_dev_sum += abs_dev_from_buffer(buffer, p.k);
        ledger.release("sample_buffer");
    }
    ledger.release("abs_dev_accumulator");
    const long double mean = static_cast<long double>(abs_dev_sum) /
                             (2.0L * static_cast<long double>(plan.s) * static_cast<long double>(p.k) *
                              static_cast<long double>(plan.T));
    return mean > static_cast<long double>(threshold_large(plan.s, p.k, p.eps, *large_s_gap_constant))
               ? Verdict::Reject
               : Verdict::Accept;
}

} // namespace streamtest
