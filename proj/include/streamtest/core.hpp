#pragma once

#include <cstdint>
#include <vector>
#include <Eigen/Dense>

#include "streamtest/common.hpp"
#include "streamtest/rng.hpp"

namespace streamtest {

// Probability vector over a finite domain {0, ..., k-1}.
using Pmf = Eigen::VectorXd;
using CountVec = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

inline constexpr double kPmfSumTolerance = 1e-12;

// Throws unless `p` has length >= 2, nonnegative entries, and sums to 1
// within kPmfSumTolerance.
void validate_pmf(const Pmf& p);

struct ProblemParams {
    std::int64_t k = 0;      // domain size
    double eps = 0.0;        // distance parameter, in (0, 1]
    std::int64_t n = 0;      // stream length
    std::int64_t m = 0;      // memory budget in bits
};

// Memory budgets below max(ceil(log2 n), ceil(log2 k), ceil(log2(1/eps)))
// cannot address the input; budgets above min(k*ceil(log2(n+1)),
// n*ceil(log2 k)) can store the full histogram or the full sample, so the
// problem is trivial. Only the band in between is accepted.
ProblemParams validate_params(const ProblemParams& p);

Pmf make_uniform(std::int64_t k);

// Alternating pair perturbation: entries (1+2*eps)/k, (1-2*eps)/k.
// TV distance to uniform is exactly eps; L-infinity norm stays <= 2/k.
// k must be even and eps <= 0.5 (larger eps would need negative mass).
Pmf make_paninski_far(std::int64_t k, double eps);

// Uniform on the first support_size symbols; TV to uniform_k is
// 1 - support_size/k.
Pmf make_subset_uniform(std::int64_t k, std::int64_t support_size);

// (1/2) * sum |p_i - q_i|
double tv_distance(const Pmf& p, const Pmf& q);

// Single-pass i.i.d. sample source. Symbols are drawn by inverse CDF over a
// precomputed cumulative vector with a counter-based generator, so the i-th
// symbol depends only on (pmf, seed, i). Consumed samples cannot be re-read.
class SampleStream {
public:
    SampleStream(const Pmf& source, std::int64_t length, std::uint64_t seed);

    std::int64_t length() const { return length_; }
    std::int64_t consumed() const { return cursor_; }
    std::int64_t remaining() const { return length_ - cursor_; }
    std::uint64_t seed() const { return seed_; }
    std::int64_t domain_size() const { return cdf_.size(); }

    std::uint32_t next();

private:
    Eigen::VectorXd cdf_;
    std::int64_t length_;
    std::uint64_t seed_;
    std::int64_t cursor_ = 0;
};

SampleStream draw_stream(const Pmf& p, std::int64_t n, std::uint64_t seed);

struct Counts {
    CountVec freq;
    std::int64_t total = 0;
};

// Exact per-symbol frequencies; every symbol must lie in [0, k).
Counts histogram(const std::uint32_t* samples, std::int64_t len, std::int64_t k);
Counts histogram(const std::vector<std::uint32_t>& samples, std::int64_t k);

// Drains `count` samples from the stream into a Counts over [0, k).
Counts histogram_from_stream(SampleStream& stream, std::int64_t count, std::int64_t k);

} // namespace streamtest
