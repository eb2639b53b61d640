#include "streamtest/core.hpp"

#include <algorithm>
#include <cmath>

#include "streamtest/ledger.hpp"

namespace streamtest {

void validate_pmf(const Pmf& p) {
    if (p.size() < 2) fail(Errc::invalid_argument, "pmf: length must be >= 2");
    if ((p.array() < 0.0).any()) fail(Errc::invalid_argument, "pmf: negative entry");
    const double sum = p.sum();
    if (std::abs(sum - 1.0) > kPmfSumTolerance)
        fail(Errc::invalid_argument, "pmf: entries sum to " + std::to_string(sum) + ", not 1");
}

ProblemParams validate_params(const ProblemParams& p) {
    if (p.k < 2) fail(Errc::invalid_argument, "params: k must be >= 2");
    if (p.n < 1) fail(Errc::invalid_argument, "params: n must be >= 1");
    if (p.m < 1) fail(Errc::invalid_argument, "params: m must be >= 1");
    if (!(p.eps > 0.0) || p.eps > 1.0) fail(Errc::invalid_argument, "params: eps must be in (0,1]");

    const std::int64_t lower =
        std::max({ceil_log2(static_cast<std::uint64_t>(p.n)), ceil_log2(static_cast<std::uint64_t>(p.k)),
                  ceil_log2_inverse(p.eps)});
    const std::int64_t upper =
        std::min(p.k * bits_for_counter(static_cast<std::uint64_t>(p.n)),
                 p.n * ceil_log2(static_cast<std::uint64_t>(p.k)));
    if (p.m < lower)
        fail(Errc::regime_too_small, "REGIME_TOO_SMALL: m = " + std::to_string(p.m) +
                                         " below max(log n, log k, log 1/eps) = " + std::to_string(lower));
    if (p.m > upper)
        fail(Errc::regime_too_large, "REGIME_TOO_LARGE: m = " + std::to_string(p.m) +
                                         " above min(k log n, n log k) = " + std::to_string(upper));
    return p;
}

Pmf make_uniform(std::int64_t k) {
    if (k < 2) fail(Errc::invalid_argument, "make_uniform: k must be >= 2");
    return Pmf::Constant(k, 1.0 / static_cast<double>(k));
}

Pmf make_paninski_far(std::int64_t k, double eps) {
    if (k < 2 || k % 2 != 0) fail(Errc::invalid_argument, "make_paninski_far: k must be even and >= 2");
    if (eps < 0.0 || eps > 0.5)
        fail(Errc::invalid_argument, "make_paninski_far: eps must be in [0, 0.5], got " + std::to_string(eps));
    Pmf p(k);
    const double up = (1.0 + 2.0 * eps) / static_cast<double>(k);
    const double down = (1.0 - 2.0 * eps) / static_cast<double>(k);
    for (std::int64_t i = 0; i < k; i += 2) {
        p[i] = up;
        p[i + 1] = down;
    }
    return p;
}

Pmf make_subset_uniform(std::int64_t k, std::int64_t support_size) {
    if (k < 2) fail(Errc::invalid_argument, "make_subset_uniform: k must be >= 2");
    if (support_size < 1 || support_size > k)
        fail(Errc::out_of_range, "make_subset_uniform: support_size out of [1, k]");
    Pmf p = Pmf::Zero(k);
    p.head(support_size).setConstant(1.0 / static_cast<double>(support_size));
    return p;
}

double tv_distance(const Pmf& p, const Pmf& q) {
    if (p.size() != q.size()) fail(Errc::length_mismatch, "tv_distance: length mismatch");
    return 0.5 * (p - q).cwiseAbs().sum();
}

SampleStream::SampleStream(const Pmf& source, std::int64_t length, std::uint64_t seed)
    : length_(length), seed_(seed) {
    if (length < 0) fail(Errc::invalid_argument, "stream: negative length");
    validate_pmf(source);
    cdf_.resize(source.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < source.size(); ++i) {
        acc += source[i];
        cdf_[i] = acc;
    }
    cdf_[source.size() - 1] = 1.0; // guard against round-off at the top
}

std::uint32_t SampleStream::next() {
    if (cursor_ >= length_) fail(Errc::stream_exhausted, "stream: exhausted");
    const double u = uniform01(value_at(seed_, static_cast<std::uint64_t>(cursor_)));
    ++cursor_;
    const double* begin = cdf_.data();
    const double* end = begin + cdf_.size();
    const double* it = std::upper_bound(begin, end, u);
    if (it == end) --it;
    return static_cast<std::uint32_t>(it - begin);
}

SampleStream draw_stream(const Pmf& p, std::int64_t n, std::uint64_t seed) {
    return SampleStream(p, n, seed);
}

Counts histogram(const std::uint32_t* samples, std::int64_t len, std::int64_t k) {
    if (k < 1) fail(Errc::invalid_argument, "histogram: k must be >= 1");
    Counts c;
    c.freq = CountVec::Zero(k);
    for (std::int64_t i = 0; i < len; ++i) {
        if (samples[i] >= static_cast<std::uint64_t>(k))
            fail(Errc::out_of_range, "histogram: symbol " + std::to_string(samples[i]) + " outside [0," +
                                         std::to_string(k) + ")");
        ++c.freq[samples[i]];
    }
    c.total = len;
    return c;
}

Counts histogram(const std::vector<std::uint32_t>& samples, std::int64_t k) {
    return histogram(samples.data(), static_cast<std::int64_t>(samples.size()), k);
}

Counts histogram_from_stream(SampleStream& stream, std::int64_t count, std::int64_t k) {
    if (count > stream.remaining()) fail(Errc::stream_exhausted, "histogram_from_stream: not enough samples");
    Counts c;
    c.freq = CountVec::Zero(k);
    for (std::int64_t i = 0; i < count; ++i) {
        const std::uint32_t x = stream.next();
        if (x >= static_cast<std::uint64_t>(k)) fail(Errc::out_of_range, "histogram_from_stream: symbol out of range");
        ++c.freq[x];
    }
    c.total = count;
    return c;
}

} // namespace streamtest
