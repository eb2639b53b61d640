#include "doctest.h"

#include <cmath>
#include <set>

#include "streamtest/core.hpp"
#include "streamtest/rng.hpp"

using namespace streamtest;

TEST_CASE("validate_params enforces the memory band") {
    CHECK_NOTHROW(validate_params({1024, 0.5, 1000000, 64}));

    CHECK_THROWS_WITH_AS(validate_params({4, 0.5, 4, 1000000}), doctest::Contains("REGIME_TOO_LARGE"),
                         Error);
    CHECK_THROWS_WITH_AS(validate_params({1024, 0.5, 1000000, 12}), doctest::Contains("REGIME_TOO_SMALL"),
                         Error);

    // Exact bounds: lower = max(20, 10, 1) = 20; upper = min(k*21, n*10).
    CHECK_NOTHROW(validate_params({1024, 0.5, 1000000, 20}));
    CHECK_THROWS_AS(validate_params({1024, 0.5, 1000000, 19}), Error);

    CHECK_THROWS_AS(validate_params({1024, 1.5, 1000000, 64}), Error);
    CHECK_THROWS_AS(validate_params({1, 0.5, 10, 5}), Error);
}

TEST_CASE("make_uniform") {
    const Pmf u2 = make_uniform(2);
    CHECK(u2[0] == 0.5);
    CHECK(u2[1] == 0.5);
    const Pmf u4 = make_uniform(4);
    for (int i = 0; i < 4; ++i) CHECK(u4[i] == 0.25);
    const Pmf u5 = make_uniform(5);
    for (int i = 0; i < 5; ++i) CHECK(u5[i] == doctest::Approx(0.2));
    CHECK(u5.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(make_uniform(1), Error);
}

TEST_CASE("make_paninski_far") {
    const Pmf p2 = make_paninski_far(2, 0.25);
    CHECK(p2[0] == doctest::Approx(0.75));
    CHECK(p2[1] == doctest::Approx(0.25));
    CHECK(tv_distance(p2, make_uniform(2)) == doctest::Approx(0.25).epsilon(1e-12));

    const Pmf p4 = make_paninski_far(4, 0.5);
    CHECK(p4[0] == doctest::Approx(0.5));
    CHECK(p4[1] == 0.0);
    CHECK(p4[2] == doctest::Approx(0.5));
    CHECK(p4[3] == 0.0);

    const Pmf p6 = make_paninski_far(6, 0.0);
    CHECK(tv_distance(p6, make_uniform(6)) == 0.0);

    CHECK_THROWS_AS(make_paninski_far(5, 0.2), Error);
    CHECK_THROWS_AS(make_paninski_far(6, 0.51), Error);

    // Small L-infinity family: max entry (1+2 eps)/k <= 2/k for eps <= 1/2.
    for (double eps : {0.1, 0.3, 0.5}) {
        const Pmf p = make_paninski_far(10, eps);
        CHECK(p.maxCoeff() <= 2.0 / 10.0 + 1e-15);
        CHECK(tv_distance(p, make_uniform(10)) == doctest::Approx(eps).epsilon(1e-12));
    }
}

TEST_CASE("make_subset_uniform") {
    CHECK(tv_distance(make_subset_uniform(4, 4), make_uniform(4)) == 0.0);
    const Pmf p = make_subset_uniform(4, 1);
    CHECK(p[0] == 1.0);
    CHECK(tv_distance(p, make_uniform(4)) == doctest::Approx(0.75));
    CHECK(tv_distance(make_subset_uniform(10, 5), make_uniform(10)) == doctest::Approx(0.5));
    CHECK_THROWS_AS(make_subset_uniform(4, 0), Error);
    CHECK_THROWS_AS(make_subset_uniform(4, 5), Error);
}

TEST_CASE("tv_distance") {
    CHECK(tv_distance(make_uniform(4), make_uniform(4)) == 0.0);
    CHECK(tv_distance(make_subset_uniform(2, 1), make_uniform(2)) == doctest::Approx(0.5));
    CHECK(tv_distance(make_paninski_far(6, 0.3), make_uniform(6)) == doctest::Approx(0.3).epsilon(1e-12));
    Pmf a = make_uniform(3), b = make_uniform(4);
    CHECK_THROWS_AS(tv_distance(a, b), Error);
}

TEST_CASE("tv_distance is a metric on random triples") {
    CounterRng rng(11);
    auto random_pmf = [&](std::int64_t k) {
        Pmf p(k);
        double sum = 0.0;
        for (std::int64_t i = 0; i < k; ++i) {
            p[i] = -std::log(1.0 - rng.next_double());
            sum += p[i];
        }
        return Pmf(p / sum);
    };
    for (int rep = 0; rep < 50; ++rep) {
        const std::int64_t k = 2 + static_cast<std::int64_t>(rng() % 30);
        const Pmf p = random_pmf(k), q = random_pmf(k), r = random_pmf(k);
        const double pq = tv_distance(p, q);
        CHECK(pq == doctest::Approx(tv_distance(q, p)));
        CHECK(pq <= tv_distance(p, r) + tv_distance(r, q) + 1e-12);
        CHECK(pq >= 0.0);
        CHECK(pq <= 1.0 + 1e-12);
        CHECK(tv_distance(p, p) == 0.0);
    }
}

TEST_CASE("draw_stream basics") {
    SUBCASE("empty stream") {
        SampleStream s = draw_stream(make_uniform(4), 0, 7);
        CHECK(s.length() == 0);
        CHECK_THROWS_AS(s.next(), Error);
    }
    SUBCASE("point mass emits its atom") {
        Pmf p = Pmf::Zero(6);
        p[3] = 1.0;
        SampleStream s = draw_stream(p, 5, 99);
        for (int i = 0; i < 5; ++i) CHECK(s.next() == 3);
        CHECK_THROWS_AS(s.next(), Error); // single pass, no re-read
    }
    SUBCASE("reproducible per seed") {
        SampleStream a = draw_stream(make_uniform(100), 2000, 42);
        SampleStream b = draw_stream(make_uniform(100), 2000, 42);
        SampleStream c = draw_stream(make_uniform(100), 2000, 43);
        bool differs = false;
        for (int i = 0; i < 2000; ++i) {
            const auto xa = a.next();
            CHECK(xa == b.next());
            if (xa != c.next()) differs = true;
        }
        CHECK(differs);
    }
}

TEST_CASE("draw_stream marginals match the source" * doctest::timeout(60)) {
    const std::int64_t k = 1000, n = 100000;
    SampleStream s = draw_stream(make_uniform(k), n, 7);
    std::vector<std::int64_t> freq(static_cast<std::size_t>(k), 0);
    for (std::int64_t i = 0; i < n; ++i) ++freq[s.next()];
    // Binomial concentration: each count within 5 sigma of n/k.
    const double mean = static_cast<double>(n) / static_cast<double>(k);
    const double sigma = std::sqrt(mean * (1.0 - 1.0 / static_cast<double>(k)));
    for (std::int64_t i = 0; i < k; ++i)
        CHECK(std::abs(static_cast<double>(freq[static_cast<std::size_t>(i)]) - mean) <= 5.0 * sigma);
}

TEST_CASE("histogram") {
    SUBCASE("empty") {
        const Counts c = histogram(std::vector<std::uint32_t>{}, 3);
        CHECK(c.total == 0);
        CHECK(c.freq.sum() == 0);
    }
    SUBCASE("multiplicities") {
        const Counts c = histogram(std::vector<std::uint32_t>{0, 0, 1}, 3);
        CHECK(c.freq[0] == 2);
        CHECK(c.freq[1] == 1);
        CHECK(c.freq[2] == 0);
        CHECK(c.total == 3);
    }
    SUBCASE("out of range symbol") {
        CHECK_THROWS_AS(histogram(std::vector<std::uint32_t>{3}, 3), Error);
    }
    SUBCASE("recount by independent pass") {
        CounterRng rng(5);
        std::vector<std::uint32_t> samples;
        for (int i = 0; i < 100; ++i) samples.push_back(static_cast<std::uint32_t>(rng() % 10));
        const Counts c = histogram(samples, 10);
        CHECK(c.total == 100);
        for (std::uint32_t v = 0; v < 10; ++v) {
            std::int64_t direct = 0;
            for (auto x : samples)
                if (x == v) ++direct;
            CHECK(c.freq[v] == direct);
        }
    }
    SUBCASE("histogram of a drawn stream totals n for all seeds") {
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            SampleStream s = draw_stream(make_uniform(17), 503, seed);
            Counts c = histogram_from_stream(s, 503, 17);
            CHECK(c.total == 503);
            CHECK(c.freq.sum() == 503);
        }
    }
}
