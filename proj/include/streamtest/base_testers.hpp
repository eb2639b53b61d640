#pragma once

#include <cstdint>

#include "streamtest/core.hpp"

namespace streamtest {

// Configuration of a counts-only tester; `threshold` comes from the
// calibration cache (null Monte Carlo quantile at 1 - delta).
struct TesterConfig {
    std::int64_t k = 0;
    double eps = 0.0;
    double delta = 0.1;
    double threshold = 0.0;
};

// S = sum_i ((N_i - n r_i)^2 - N_i) / (n r_i). Requires a strictly positive
// reference. Under the reference the statistic concentrates near 0 (exactly
// -1 in expectation for fixed-n multinomial sampling); under an eps-far
// source it scales like n * chi^2(p || r).
double identity_chi2_statistic(const Counts& counts, const Pmf& reference);

// Rejects iff the statistic strictly exceeds config.threshold.
Verdict identity_chi2_test(const Counts& counts, const Pmf& reference, const TesterConfig& config);

// C = sum_i ((X_i - Y_i)^2 - X_i - Y_i) over two equal-length count vectors.
// Symmetric in its arguments; negative in expectation when the sources match.
double closeness_statistic(const Counts& counts_p, const Counts& counts_q);

Verdict closeness_test(const Counts& counts_p, const Counts& counts_q, const TesterConfig& config);

} // namespace streamtest
