#include "streamtest/base_testers.hpp"

namespace streamtest {

double identity_chi2_statistic(const Counts& counts, const Pmf& reference) {
    if (counts.freq.size() != reference.size())
        fail(Errc::length_mismatch, "identity_chi2: counts length != reference length");
    if (counts.total < 1) fail(Errc::invalid_argument, "identity_chi2: empty counts");
    if ((reference.array() <= 0.0).any())
        fail(Errc::invalid_argument, "identity_chi2: reference has a zero entry");
    const double n = static_cast<double>(counts.total);
    const Eigen::ArrayXd N = counts.freq.cast<double>().array();
    const Eigen::ArrayXd expected = n * reference.array();
    return (((N - expected).square() - N) / expected).sum();
}

Verdict identity_chi2_test(const Counts& counts, const Pmf& reference, const TesterConfig& config) {
    return identity_chi2_statistic(counts, reference) > config.threshold ? Verdict::Reject : Verdict::Accept;
}

double closeness_statistic(const Counts& counts_p, const Counts& counts_q) {
    if (counts_p.freq.size() != counts_q.freq.size())
        fail(Errc::length_mismatch, "closeness: count vectors of different length");
    if (counts_p.total != counts_q.total)
        fail(Errc::invalid_argument, "closeness: totals differ (" + std::to_string(counts_p.total) + " vs " +
                                         std::to_string(counts_q.total) + ")");
    const Eigen::ArrayXd X = counts_p.freq.cast<double>().array();
    const Eigen::ArrayXd Y = counts_q.freq.cast<double>().array();
    return ((X - Y).square() - X - Y).sum();
}

Verdict closeness_test(const Counts& counts_p, const Counts& counts_q, const TesterConfig& config) {
    return closeness_statistic(counts_p, counts_q) > config.threshold ? Verdict::Reject : Verdict::Accept;
}

} // namespace streamtest
