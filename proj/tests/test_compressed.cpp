#include "doctest.h"

#include <cmath>

#include "streamtest/base_testers.hpp"
#include "streamtest/compressed.hpp"
#include "streamtest/partition.hpp"
#include "streamtest/rng.hpp"

using namespace streamtest;

namespace {

CalibrationRecord default_record() {
    CalibrationRecord rec;
    rec.c1 = 0.3;
    rec.c2_amp = 0.5;
    rec.delta = 0.1;
    rec.repetitions = 18;
    return rec;
}

} // namespace

TEST_CASE("amplify thresholding") {
    SUBCASE("accept-rate cut at 0.725 for (0.1, 0.5)") {
        std::vector<Verdict> v(18, Verdict::Accept);
        // 13/18 = 0.722 < 0.725 rejects, 14/18 = 0.778 accepts.
        for (int i = 0; i < 5; ++i) v[static_cast<std::size_t>(i)] = Verdict::Reject;
        CHECK(amplify(v, 0.1, 0.5) == Verdict::Reject);
        v[4] = Verdict::Accept;
        CHECK(amplify(v, 0.1, 0.5) == Verdict::Accept);
    }
    SUBCASE("all accepts at (0, 1)") {
        CHECK(amplify({Verdict::Accept, Verdict::Accept}, 0.0, 1.0) == Verdict::Accept);
    }
    SUBCASE("gap closes at delta = c2/(1+c2)") {
        CHECK_THROWS_AS(amplify({Verdict::Accept}, 0.1, 1.0 / 9.0), Error);
    }
    SUBCASE("no verdicts") {
        CHECK_THROWS_AS(amplify({}, 0.1, 0.5), Error);
    }
}

TEST_CASE("plan_compression layouts") {
    const CalibrationRecord rec = default_record();
    SUBCASE("reference mid-budget layout") {
        const CompressionPlan plan = plan_compression({10000, 0.5, 1000000, 1400}, rec, false);
        CHECK_FALSE(plan.identity_mode);
        CHECK(plan.k_prime == 68);
        CHECK(plan.eps_prime == doctest::Approx(0.3 * std::sqrt(68.0 / 10000.0) * 0.5).epsilon(1e-12));
        CHECK(plan.repetitions == 18);
        CHECK(plan.segment_length == 1000000 / 18);
        CHECK(plan.seed_bits == 14);
        CHECK(plan.counts_bits == 68 * 20);
        CHECK(plan.counter_bits == 10);
        CHECK(plan.seed_bits + plan.counts_bits + plan.counter_bits <= 1400);
    }
    SUBCASE("doubled counts for closeness") {
        const CompressionPlan plan = plan_compression({10000, 0.5, 1000000, 1400}, rec, true);
        CHECK(plan.k_prime == 34);
        CHECK(plan.counts_bits == 2 * 34 * 20);
    }
    SUBCASE("full-histogram budget degenerates to the identity layout") {
        const std::int64_t k = 50, n = 3000;
        const std::int64_t m = k * bits_for_counter(static_cast<std::uint64_t>(n));
        const CompressionPlan plan = plan_compression({k, 0.5, n, m}, rec, false);
        CHECK(plan.identity_mode);
        CHECK(plan.k_prime == k);
        CHECK(plan.repetitions == 1);
        CHECK(plan.segment_length == n);
        CHECK(plan.eps_prime == doctest::Approx(0.3 * 0.5));
    }
    SUBCASE("eps carries through unchanged when k' = k and c1 = 1") {
        CalibrationRecord unit = default_record();
        unit.c1 = 1.0;
        const std::int64_t k = 50, n = 3000;
        const std::int64_t m = k * bits_for_counter(static_cast<std::uint64_t>(n));
        const CompressionPlan plan = plan_compression({k, 1.0, n, m}, unit, false);
        CHECK(plan.eps_prime == doctest::Approx(1.0));
    }
    SUBCASE("budget too small for two induced counters") {
        CHECK_THROWS_AS(plan_compression({1024, 0.5, 1000000, 21}, rec, false), Error);
    }
}

TEST_CASE("compressed uniformity separates uniform from far" * doctest::timeout(300)) {
    const std::int64_t k = 60, n = 30000, m = 500;
    const ProblemParams params{k, 0.5, n, m};
    CalibrationRecord rec = default_record();
    const CompressionPlan plan = plan_compression(params, rec, false);
    REQUIRE_FALSE(plan.identity_mode);
    ensure_threshold(rec, threshold_key_for_plan(params, plan, false), 20000, 4242);

    const Pmf uniform = make_uniform(k);
    const Pmf far = make_paninski_far(k, 0.5);
    int uniform_accepts = 0, far_rejects = 0;
    std::int64_t peak = 0;
    const int trials = 30;
    for (int t = 0; t < trials; ++t) {
        {
            SampleStream stream = draw_stream(uniform, n, derive_seed(51, t));
            BitLedger ledger(m);
            if (run_compressed_uniformity(stream, params, ledger, rec, derive_seed(52, t)) ==
                Verdict::Accept)
                ++uniform_accepts;
            peak = std::max(peak, ledger.peak_bits());
        }
        {
            SampleStream stream = draw_stream(far, n, derive_seed(53, t));
            BitLedger ledger(m);
            if (run_compressed_uniformity(stream, params, ledger, rec, derive_seed(54, t)) ==
                Verdict::Reject)
                ++far_rejects;
        }
    }
    CHECK(uniform_accepts >= 2 * trials / 3);
    CHECK(far_rejects >= 2 * trials / 3);
    CHECK(peak <= m);
    CHECK(peak == plan.seed_bits + plan.counts_bits + plan.counter_bits);

    SUBCASE("missing threshold fails loudly") {
        CalibrationRecord empty = default_record();
        SampleStream stream = draw_stream(uniform, n, 1);
        BitLedger ledger(m);
        CHECK_THROWS_AS(run_compressed_uniformity(stream, params, ledger, empty, 2), Error);
    }
}

TEST_CASE("per-repetition completeness: null acceptance stays above 1 - delta") {
    // With the true source uniform, each repetition tests its own exactly
    // induced reference, so the per-repetition accept rate must track the
    // calibrated quantile.
    const std::int64_t k = 60, n = 30000, m = 500;
    const ProblemParams params{k, 0.5, n, m};
    CalibrationRecord rec;
    const CompressionPlan plan = plan_compression(params, rec, false);
    const ThresholdKey key = threshold_key_for_plan(params, plan, false);
    ensure_threshold(rec, key, 20000, 4242);
    const TesterConfig config{plan.k_prime, plan.eps_prime, plan.delta, rec.threshold_for(key)};

    const Pmf uniform = make_uniform(k);
    int accepts = 0;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) {
        const Partition pi(k, plan.k_prime, derive_seed(4040, r));
        const auto cells = cell_table(pi);
        SampleStream stream = draw_stream(uniform, plan.segment_length, derive_seed(4141, r));
        Counts counts;
        counts.freq = CountVec::Zero(plan.k_prime);
        for (std::int64_t i = 0; i < plan.segment_length; ++i) ++counts.freq[cells[stream.next()]];
        counts.total = plan.segment_length;
        if (identity_chi2_test(counts, induced_uniform_reference(pi), config) == Verdict::Accept)
            ++accepts;
    }
    const double rate = static_cast<double>(accepts) / reps;
    const double sigma = std::sqrt(plan.delta * (1.0 - plan.delta) / reps);
    CHECK(rate >= 1.0 - plan.delta - 3.0 * sigma);
}

TEST_CASE("compressed uniformity is deterministic per seeds") {
    const std::int64_t k = 60, n = 30000, m = 500;
    const ProblemParams params{k, 0.5, n, m};
    CalibrationRecord rec = default_record();
    ensure_threshold(rec, threshold_key_for_plan(params, plan_compression(params, rec, false), false),
                     20000, 4242);
    for (std::uint64_t t = 0; t < 5; ++t) {
        Verdict a, b;
        {
            SampleStream stream = draw_stream(make_paninski_far(k, 0.5), n, derive_seed(7, t));
            BitLedger ledger(m);
            a = run_compressed_uniformity(stream, params, ledger, rec, derive_seed(8, t));
        }
        {
            SampleStream stream = draw_stream(make_paninski_far(k, 0.5), n, derive_seed(7, t));
            BitLedger ledger(m);
            b = run_compressed_uniformity(stream, params, ledger, rec, derive_seed(8, t));
        }
        CHECK(a == b);
    }
}

TEST_CASE("full-histogram budget reproduces the base tester verdict exactly") {
    const std::int64_t k = 30, n = 500;
    const std::int64_t m = k * bits_for_counter(static_cast<std::uint64_t>(n));
    const ProblemParams params{k, 0.5, n, m};
    CalibrationRecord rec = default_record();
    const CompressionPlan plan = plan_compression(params, rec, false);
    REQUIRE(plan.identity_mode);
    const ThresholdKey key = threshold_key_for_plan(params, plan, false);
    ensure_threshold(rec, key, 20000, 777);
    const TesterConfig config{plan.k_prime, plan.eps_prime, plan.delta, rec.threshold_for(key)};

    // Mildly perturbed source so verdicts vary with the seed.
    const Pmf source = make_paninski_far(k, 0.08);
    int disagreements = 0, rejects = 0;
    for (std::uint64_t t = 0; t < 100; ++t) {
        Verdict compressed;
        {
            SampleStream stream = draw_stream(source, n, derive_seed(61, t));
            BitLedger ledger(m);
            compressed = run_compressed_uniformity(stream, params, ledger, rec, derive_seed(62, t));
            CHECK(ledger.peak_bits() == m);
        }
        SampleStream stream = draw_stream(source, n, derive_seed(61, t));
        Counts counts = histogram_from_stream(stream, n, k);
        const Verdict direct = identity_chi2_test(counts, make_uniform(k), config);
        if (compressed != direct) ++disagreements;
        if (direct == Verdict::Reject) ++rejects;
    }
    CHECK(disagreements == 0);
    CHECK(rejects > 5); // the comparison exercises both verdicts
    CHECK(rejects < 95);
}

TEST_CASE("compressed closeness accepts equal sources and rejects far pairs" * doctest::timeout(300)) {
    const std::int64_t k = 60, n = 40000, m = 500;
    const ProblemParams params{k, 0.5, n, m};
    CalibrationRecord rec = default_record();
    const CompressionPlan plan = plan_compression(params, rec, true);
    ensure_threshold(rec, threshold_key_for_plan(params, plan, true), 20000, 31337);

    const Pmf uniform = make_uniform(k);
    const Pmf skewed = make_paninski_far(k, 0.4); // equal-pair case away from uniform
    const Pmf far = make_paninski_far(k, 0.5);
    int equal_accepts = 0, far_rejects = 0;
    std::int64_t peak = 0;
    const int trials = 30;
    for (int t = 0; t < trials; ++t) {
        {
            SampleStream sp = draw_stream(skewed, n, derive_seed(71, t));
            SampleStream sq = draw_stream(skewed, n, derive_seed(72, t));
            BitLedger ledger(m);
            if (run_compressed_closeness(sp, sq, params, ledger, rec, derive_seed(73, t)) ==
                Verdict::Accept)
                ++equal_accepts;
            peak = std::max(peak, ledger.peak_bits());
        }
        {
            SampleStream sp = draw_stream(uniform, n, derive_seed(74, t));
            SampleStream sq = draw_stream(far, n, derive_seed(75, t));
            BitLedger ledger(m);
            if (run_compressed_closeness(sp, sq, params, ledger, rec, derive_seed(76, t)) ==
                Verdict::Reject)
                ++far_rejects;
        }
    }
    CHECK(equal_accepts >= 2 * trials / 3);
    CHECK(far_rejects >= 2 * trials / 3);
    CHECK(peak <= m);

    SUBCASE("length mismatch") {
        SampleStream sp = draw_stream(uniform, n, 1);
        SampleStream sq = draw_stream(uniform, n - 1, 1);
        BitLedger ledger(m);
        CHECK_THROWS_AS(run_compressed_closeness(sp, sq, params, ledger, rec, 3), Error);
    }
}

TEST_CASE("recommended lengths stabilize the counter width") {
    CalibrationRecord rec = default_record();
    const std::int64_t n_unif = recommended_uniformity_length(10000, 0.5, 1400, rec);
    // The planner must agree with itself when the length is fed back in.
    const CompressionPlan plan = plan_compression({10000, 0.5, n_unif, 1400}, rec, false);
    const double per_test = rec.c4_identity * std::sqrt(static_cast<double>(plan.k_prime)) /
                            (plan.eps_prime * plan.eps_prime);
    CHECK(n_unif == plan.repetitions * static_cast<std::int64_t>(std::ceil(per_test)));
    CHECK(bits_for_counter(static_cast<std::uint64_t>(n_unif)) == 20);

    const std::int64_t n_close = recommended_closeness_length(10000, 0.5, 1400, rec);
    CHECK(n_close > n_unif); // the two-sample rate includes the k^(2/3) term
}
