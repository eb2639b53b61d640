#include "streamtest/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "streamtest/base_testers.hpp"

namespace streamtest {

namespace {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace

std::string ThresholdKey::serialize() const {
    std::ostringstream os;
    os << statistic << ' ' << k << ' ' << format_real(eps) << ' ' << format_real(delta) << ' ' << n << ' '
       << ref;
    return os.str();
}

Pmf reference_for_key(const ThresholdKey& key) {
    if (key.ref == "uniform") return make_uniform(key.k);
    if (key.ref.rfind("balanced:", 0) == 0) {
        const std::int64_t source_k = std::stoll(key.ref.substr(9));
        if (source_k < key.k) fail(Errc::invalid_argument, "threshold key: balanced source smaller than k");
        const std::int64_t q = source_k / key.k;
        const std::int64_t big = source_k % key.k;
        Pmf r(key.k);
        for (std::int64_t c = 0; c < key.k; ++c)
            r[c] = static_cast<double>(c < big ? q + 1 : q) / static_cast<double>(source_k);
        return r;
    }
    fail(Errc::invalid_argument, "threshold key: unknown reference '" + key.ref + "'");
}

bool CalibrationRecord::has_threshold(const ThresholdKey& key) const {
    return thresholds.count(key.serialize()) > 0;
}

double CalibrationRecord::threshold_for(const ThresholdKey& key) const {
    auto it = thresholds.find(key.serialize());
    if (it == thresholds.end())
        fail(Errc::calibration_missing, "calibration: no threshold for '" + key.serialize() + "'");
    return it->second;
}

void CalibrationRecord::set_threshold(const ThresholdKey& key, double value) {
    thresholds[key.serialize()] = value;
}

CalibrationRecord load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::calibration_missing, "calibration: cannot open '" + path + "'");
    std::string header;
    std::getline(in, header);
    if (header.rfind("streamtest-calibration v1", 0) != 0)
        fail(Errc::calibration_missing, "calibration: bad header in '" + path + "'");
    CalibrationRecord rec;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "seed") ls >> rec.seed;
        else if (tag == "c1") ls >> rec.c1;
        else if (tag == "c2_floor") ls >> rec.c2_floor;
        else if (tag == "c2_amp") ls >> rec.c2_amp;
        else if (tag == "delta") ls >> rec.delta;
        else if (tag == "repetitions") ls >> rec.repetitions;
        else if (tag == "large_s_gap") ls >> rec.large_s_gap;
        else if (tag == "large_s_var") ls >> rec.large_s_var;
        else if (tag == "c4_identity") ls >> rec.c4_identity;
        else if (tag == "c4_closeness") ls >> rec.c4_closeness;
        else if (tag == "threshold") {
            std::string statistic, k_s, eps_s, delta_s, n_s, ref;
            double value = 0.0;
            ls >> statistic >> k_s >> eps_s >> delta_s >> n_s >> ref >> value;
            if (!ls) fail(Errc::calibration_missing, "calibration: malformed threshold row: " + line);
            // Keep the writer's own key text so lookups match byte for byte.
            rec.thresholds[statistic + ' ' + k_s + ' ' + eps_s + ' ' + delta_s + ' ' + n_s + ' ' + ref] =
                value;
        } else {
            fail(Errc::calibration_missing, "calibration: unknown tag '" + tag + "'");
        }
    }
    return rec;
}

void save_calibration(const CalibrationRecord& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(Errc::io_error, "calibration: cannot write '" + path + "'");
    out << "streamtest-calibration v1\n";
    out << "seed " << rec.seed << '\n';
    out << "c1 " << format_real(rec.c1) << '\n';
    out << "c2_floor " << format_real(rec.c2_floor) << '\n';
    out << "c2_amp " << format_real(rec.c2_amp) << '\n';
    out << "delta " << format_real(rec.delta) << '\n';
    out << "repetitions " << rec.repetitions << '\n';
    out << "large_s_gap " << format_real(rec.large_s_gap) << '\n';
    out << "large_s_var " << format_real(rec.large_s_var) << '\n';
    out << "c4_identity " << format_real(rec.c4_identity) << '\n';
    out << "c4_closeness " << format_real(rec.c4_closeness) << '\n';
    for (const auto& [key, value] : rec.thresholds)
        out << "threshold " << key << ' ' << format_real(value) << '\n';
}

int compute_repetitions(double delta, double c2) {
    if (!(delta >= 0.0) || !(c2 > 0.0) || c2 > 1.0)
        fail(Errc::invalid_argument, "compute_repetitions: bad (delta, c2)");
    const double gap = (1.0 - delta) * c2 - delta;
    if (!(gap > 0.0))
        fail(Errc::invalid_argument, "compute_repetitions: no amplification gap (delta >= c2/(1+c2))");
    return static_cast<int>(std::ceil(2.0 * std::log(3.0) / (gap * gap)));
}

void multinomial_sample(const Pmf& reference, std::int64_t n, CounterRng& rng, CountVec& out) {
    const Eigen::Index k = reference.size();
    out.resize(k);
    std::int64_t remaining = n;
    double rest = 1.0;
    for (Eigen::Index i = 0; i + 1 < k; ++i) {
        if (remaining == 0) {
            out.segment(i, k - i).setZero();
            return;
        }
        double p = reference[i] / rest;
        p = std::min(1.0, std::max(0.0, p));
        std::binomial_distribution<std::int64_t> bin(remaining, p);
        const std::int64_t draw = bin(rng);
        out[i] = draw;
        remaining -= draw;
        rest -= reference[i];
        if (rest <= 0.0) {
            out.segment(i + 1, k - i - 1).setZero();
            return;
        }
    }
    out[k - 1] = remaining;
}

double null_quantile(const std::string& statistic, const Pmf& reference, std::int64_t n, double delta,
                     std::int64_t replicates, std::uint64_t seed) {
    if (replicates < 1) fail(Errc::invalid_argument, "null_quantile: need replicates >= 1");
    std::vector<double> values(static_cast<std::size_t>(replicates));
    CounterRng rng(seed);
    Counts counts, counts_q;
    for (std::int64_t r = 0; r < replicates; ++r) {
        multinomial_sample(reference, n, rng, counts.freq);
        counts.total = n;
        if (statistic == "identity_chi2") {
            values[static_cast<std::size_t>(r)] = identity_chi2_statistic(counts, reference);
        } else if (statistic == "closeness") {
            multinomial_sample(reference, n, rng, counts_q.freq);
            counts_q.total = n;
            values[static_cast<std::size_t>(r)] = closeness_statistic(counts, counts_q);
        } else {
            fail(Errc::invalid_argument, "null_quantile: unknown statistic '" + statistic + "'");
        }
    }
    const std::size_t rank = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(replicates) - 1.0,
                         std::ceil((1.0 - delta) * static_cast<double>(replicates)) - 1.0));
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank), values.end());
    return values[rank];
}

void ensure_threshold(CalibrationRecord& record, const ThresholdKey& key, std::int64_t replicates,
                      std::uint64_t seed) {
    if (record.has_threshold(key)) return;
    const Pmf reference = reference_for_key(key);
    record.set_threshold(key, null_quantile(key.statistic, reference, key.n, key.delta, replicates, seed));
}

} // namespace streamtest
