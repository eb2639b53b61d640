#pragma once

#include <cstdint>

namespace streamtest {

struct UnseenMoments {
    double mean;
    double variance;
};

// Closed-form mean and variance of the normalized unseen-element count
// Z = (1/k) * #{i : N_i = 0} for s uniform samples over [k]:
//   mean = (1 - 1/k)^s
//   var  = [ k a (1 - a) + k (k-1) (b - a^2) ] / k^2,
// with a = (1-1/k)^s and b = (1-2/k)^s. Requires 0 <= s <= k.
UnseenMoments exact_unseen_moments(std::int64_t k, std::int64_t s);

// E|X - c| for X ~ Bin(s, p), arbitrary center c; O(s) stable summation.
double binomial_abs_moment(std::int64_t s, double p, double c);

// Mean absolute deviation of Bin(s, p) about its mean s*p
// (De Moivre: 2 m (1-p) P(X = m) with m = floor(s p) + 1).
double binomial_mean_abs_dev(std::int64_t s, double p);

// E[Z] for the empirical-TV statistic Z = (1/2) sum_i |N_i/s - 1/k| under
// the uniform source, any s >= 1: (k / (2s)) * MAD(Bin(s, 1/k)).
// For s <= k this equals (1 - 1/k)^s exactly.
double expected_empirical_tv_uniform(std::int64_t s, std::int64_t k);

// Exact E[Z] under the alternating pair perturbation with parameter eps
// (marginals are Bin(s, (1 +/- 2 eps)/k); expectations add).
double expected_empirical_tv_paninski(std::int64_t s, std::int64_t k, double eps);

} // namespace streamtest
