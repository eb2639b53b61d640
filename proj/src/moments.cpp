#include "streamtest/moments.hpp"

#include <cmath>

#include "streamtest/common.hpp"

namespace streamtest {

UnseenMoments exact_unseen_moments(std::int64_t k, std::int64_t s) {
    if (k < 2) fail(Errc::invalid_argument, "exact_unseen_moments: k must be >= 2");
    if (s < 0 || s > k) fail(Errc::out_of_range, "exact_unseen_moments: require 0 <= s <= k");
    const double kd = static_cast<double>(k);
    const double a = std::pow(1.0 - 1.0 / kd, static_cast<double>(s));
    const double b = std::pow(1.0 - 2.0 / kd, static_cast<double>(s));
    const double var_count = kd * a * (1.0 - a) + kd * (kd - 1.0) * (b - a * a);
    return {a, var_count / (kd * kd)};
}

namespace {

double binomial_log_pmf(std::int64_t s, double p, std::int64_t j) {
    if (p <= 0.0) return j == 0 ? 0.0 : -INFINITY;
    if (p >= 1.0) return j == s ? 0.0 : -INFINITY;
    return std::lgamma(static_cast<double>(s) + 1.0) - std::lgamma(static_cast<double>(j) + 1.0) -
           std::lgamma(static_cast<double>(s - j) + 1.0) + static_cast<double>(j) * std::log(p) +
           static_cast<double>(s - j) * std::log1p(-p);
}

} // namespace

double binomial_abs_moment(std::int64_t s, double p, double c) {
    if (s < 0) fail(Errc::invalid_argument, "binomial_abs_moment: s must be >= 0");
    if (p < 0.0 || p > 1.0) fail(Errc::invalid_argument, "binomial_abs_moment: p outside [0,1]");
    if (s == 0) return std::abs(c);
    if (p == 0.0) return std::abs(c);
    if (p == 1.0) return std::abs(static_cast<double>(s) - c);

    // Sweep outward from the mode with the pmf recurrence so tiny tail
    // terms never pollute the sum.
    const std::int64_t mode = static_cast<std::int64_t>(std::floor((static_cast<double>(s) + 1.0) * p));
    const std::int64_t m = std::min(std::max<std::int64_t>(mode, 0), s);
    const double log_pm = binomial_log_pmf(s, p, m);
    const double pm = std::exp(log_pm);
    double total = pm * std::abs(static_cast<double>(m) - c);

    double pj = pm;
    for (std::int64_t j = m + 1; j <= s; ++j) {
        pj *= (static_cast<double>(s - j + 1) / static_cast<double>(j)) * (p / (1.0 - p));
        total += pj * std::abs(static_cast<double>(j) - c);
        if (pj < 1e-18 && j > static_cast<std::int64_t>(static_cast<double>(s) * p)) break;
    }
    pj = pm;
    for (std::int64_t j = m - 1; j >= 0; --j) {
        pj *= (static_cast<double>(j + 1) / static_cast<double>(s - j)) * ((1.0 - p) / p);
        total += pj * std::abs(static_cast<double>(j) - c);
        if (pj < 1e-18 && j < static_cast<std::int64_t>(static_cast<double>(s) * p)) break;
    }
    return total;
}

double binomial_mean_abs_dev(std::int64_t s, double p) {
    if (s < 0) fail(Errc::invalid_argument, "binomial_mean_abs_dev: s must be >= 0");
    if (p < 0.0 || p > 1.0) fail(Errc::invalid_argument, "binomial_mean_abs_dev: p outside [0,1]");
    if (s == 0 || p == 0.0 || p == 1.0) return 0.0;
    const double mean = static_cast<double>(s) * p;
    const std::int64_t m = static_cast<std::int64_t>(std::floor(mean)) + 1;
    if (m > s) return 0.0;
    return 2.0 * static_cast<double>(m) * (1.0 - p) * std::exp(binomial_log_pmf(s, p, m));
}

double expected_empirical_tv_uniform(std::int64_t s, std::int64_t k) {
    if (k < 2) fail(Errc::invalid_argument, "expected_empirical_tv_uniform: k must be >= 2");
    if (s < 1) fail(Errc::invalid_argument, "expected_empirical_tv_uniform: s must be >= 1");
    const double kd = static_cast<double>(k);
    return (kd / (2.0 * static_cast<double>(s))) * binomial_mean_abs_dev(s, 1.0 / kd);
}

double expected_empirical_tv_paninski(std::int64_t s, std::int64_t k, double eps) {
    if (k < 2 || k % 2 != 0)
        fail(Errc::invalid_argument, "expected_empirical_tv_paninski: k must be even and >= 2");
    if (s < 1) fail(Errc::invalid_argument, "expected_empirical_tv_paninski: s must be >= 1");
    if (eps < 0.0 || eps > 0.5) fail(Errc::invalid_argument, "expected_empirical_tv_paninski: eps outside [0, 0.5]");
    const double kd = static_cast<double>(k);
    const double center = static_cast<double>(s) / kd;
    const double up = binomial_abs_moment(s, (1.0 + 2.0 * eps) / kd, center);
    const double down = binomial_abs_moment(s, (1.0 - 2.0 * eps) / kd, center);
    return (kd / 2.0) * 0.5 * (up + down) / static_cast<double>(s);
}

} // namespace streamtest
