#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "streamtest/core.hpp"
#include "streamtest/rng.hpp"

namespace streamtest {

// Cache key for a calibrated decision threshold. `ref` names the shape of
// the null reference: "uniform", or "balanced:<K>" for the cell masses a
// balanced partition of [K] induces on [k] (the null law depends only on
// the multiset of cell masses, not on the particular partition).
struct ThresholdKey {
    std::string statistic; // "identity_chi2" | "closeness"
    std::int64_t k = 0;
    double eps = 0.0;
    double delta = 0.0;
    std::int64_t n = 0;
    std::string ref = "uniform";

    std::string serialize() const;
};

// Reference pmf described by a threshold key.
Pmf reference_for_key(const ThresholdKey& key);

// Calibrated constants plus the cached threshold table. Persisted as a
// versioned plain-text file; see save_calibration.
struct CalibrationRecord {
    int version = 1;
    std::uint64_t seed = 0;
    double c1 = 0.3;          // TV contraction factor constant
    double c2_floor = 0.05;   // guaranteed lower bound on the contraction probability
    double c2_amp = 0.5;      // measured contraction probability used for amplification
    double delta = 0.1;       // per-repetition base-tester failure probability
    int repetitions = 18;     // amplification count R
    double large_s_gap = 0.5; // batch tester large-batch gap constant
    double large_s_var = 1.0; // upper bound on s * Var(Z) in the large-batch regime
    double c4_identity = 1.0; // samples-per-test constant, identity testing
    double c4_closeness = 1.0;// samples-per-test constant, closeness testing
    std::map<std::string, double> thresholds;

    bool has_threshold(const ThresholdKey& key) const;
    double threshold_for(const ThresholdKey& key) const; // throws calibration_missing
    void set_threshold(const ThresholdKey& key, double value);
};

CalibrationRecord load_calibration(const std::string& path);
void save_calibration(const CalibrationRecord& record, const std::string& path);

// Smallest R with two-sided Chernoff error at most 1/3 across the
// amplification gap (1-delta) - (1-(1-delta)c2). Fails when the gap closes.
int compute_repetitions(double delta, double c2);

// Draws a multinomial(n, reference) count vector via conditional binomials.
void multinomial_sample(const Pmf& reference, std::int64_t n, CounterRng& rng, CountVec& out);

// Empirical (1 - delta)-quantile of the named statistic under the null
// (counts drawn from `reference`; for closeness, both vectors from it).
double null_quantile(const std::string& statistic, const Pmf& reference, std::int64_t n, double delta,
                     std::int64_t replicates, std::uint64_t seed);

// Computes and stores the threshold for `key` if absent.
void ensure_threshold(CalibrationRecord& record, const ThresholdKey& key, std::int64_t replicates,
                      std::uint64_t seed);

} // namespace streamtest
