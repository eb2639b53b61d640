#include "streamtest/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "streamtest/compressed.hpp"
#include "streamtest/rng.hpp"

#include <nlohmann/json.hpp>

namespace streamtest {

const char* to_string(Algo a) {
    switch (a) {
        case Algo::Batch: return "batch";
        case Algo::Compress: return "compress";
        case Algo::Closeness: return "closeness";
    }
    return "?";
}

Algo parse_algo(const std::string& name) {
    if (name == "batch") return Algo::Batch;
    if (name == "compress") return Algo::Compress;
    if (name == "closeness") return Algo::Closeness;
    fail(Errc::invalid_argument, "unknown algo '" + name + "'");
}

std::string FamilySpec::label() const {
    switch (kind) {
        case Kind::Uniform: return "uniform";
        case Kind::Paninski: return "paninski";
        case Kind::Subset: return "subset";
        case Kind::PointMass: return "pointmass";
        case Kind::PmfFile: return "pmf-file";
    }
    return "?";
}

FamilySpec parse_family(const std::string& name) {
    FamilySpec f;
    if (name == "uniform") f.kind = FamilySpec::Kind::Uniform;
    else if (name == "paninski") f.kind = FamilySpec::Kind::Paninski;
    else if (name == "subset") f.kind = FamilySpec::Kind::Subset;
    else if (name == "pointmass") f.kind = FamilySpec::Kind::PointMass;
    else if (name == "pmf-file") f.kind = FamilySpec::Kind::PmfFile;
    else fail(Errc::invalid_argument, "unknown family '" + name + "'");
    return f;
}

Pmf build_family(const FamilySpec& family, std::int64_t k, double default_eps) {
    switch (family.kind) {
        case FamilySpec::Kind::Uniform: return make_uniform(k);
        case FamilySpec::Kind::Paninski:
            return make_paninski_far(k, family.eps >= 0.0 ? family.eps : default_eps);
        case FamilySpec::Kind::Subset:
            return make_subset_uniform(k, family.support >= 1 ? family.support : k / 2);
        case FamilySpec::Kind::PointMass: {
            Pmf p = Pmf::Zero(k);
            if (family.atom < 0 || family.atom >= k) fail(Errc::out_of_range, "pointmass: atom outside [k]");
            p[family.atom] = 1.0;
            return p;
        }
        case FamilySpec::Kind::PmfFile: {
            std::ifstream in(family.path);
            if (!in) fail(Errc::io_error, "pmf-file: cannot open '" + family.path + "'");
            std::vector<double> values;
            if (family.path.size() >= 5 && family.path.substr(family.path.size() - 5) == ".json") {
                nlohmann::json j;
                in >> j;
                values = j.get<std::vector<double>>();
            } else {
                double v;
                while (in >> v) values.push_back(v);
            }
            if (static_cast<std::int64_t>(values.size()) != k)
                fail(Errc::length_mismatch, "pmf-file: expected " + std::to_string(k) + " entries, got " +
                                                std::to_string(values.size()));
            Pmf p = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
            validate_pmf(p);
            return p;
        }
    }
    fail(Errc::invalid_argument, "unknown family kind");
}

namespace {

struct TrialOutcome {
    bool accept = false;
    std::int64_t peak_bits = 0;
    std::int64_t runtime_us = 0;
};

TrialOutcome run_one_trial(const ExperimentSpec& spec, const CalibrationRecord* record, std::int64_t trial) {
    const std::uint64_t data_seed = derive_seed(spec.master_seed, 2 * static_cast<std::uint64_t>(trial));
    const std::uint64_t algo_seed = derive_seed(spec.master_seed, 2 * static_cast<std::uint64_t>(trial) + 1);
    const Pmf p = build_family(spec.family, spec.params.k, spec.params.eps);

    const auto begin = std::chrono::steady_clock::now();
    BitLedger ledger(spec.params.m);
    Verdict verdict = Verdict::Accept;
    switch (spec.algo) {
        case Algo::Batch: {
            SampleStream stream = draw_stream(p, spec.params.n, data_seed);
            std::optional<double> gap;
            if (record) gap = record->large_s_gap;
            verdict = run_batch_tester(stream, spec.params, ledger, spec.batch_plan, gap);
            break;
        }
        case Algo::Compress: {
            if (!record) fail(Errc::calibration_missing, "compress: calibration record required");
            SampleStream stream = draw_stream(p, spec.params.n, data_seed);
            verdict = run_compressed_uniformity(stream, spec.params, ledger, *record, algo_seed);
            break;
        }
        case Algo::Closeness: {
            if (!record) fail(Errc::calibration_missing, "closeness: calibration record required");
            const FamilySpec fq = spec.family_q ? *spec.family_q : spec.family;
            const Pmf q = build_family(fq, spec.params.k, spec.params.eps);
            SampleStream stream_p = draw_stream(p, spec.params.n, data_seed);
            SampleStream stream_q = draw_stream(q, spec.params.n, derive_seed(data_seed, 0x71ULL));
            verdict = run_compressed_closeness(stream_p, stream_q, spec.params, ledger, *record, algo_seed);
            break;
        }
    }
    const auto end = std::chrono::steady_clock::now();

    TrialOutcome out;
    out.accept = verdict == Verdict::Accept;
    out.peak_bits = ledger.peak_bits();
    out.runtime_us = std::chrono::duration_cast<std::chrono::microseconds>(end - begin).count();
    return out;
}

} // namespace

ErrorRateReport run_experiment(const ExperimentSpec& spec, const CalibrationRecord* record) {
    if (spec.trials < 1) fail(Errc::invalid_argument, "run_experiment: trials must be >= 1");
    validate_params(spec.params);

    const int want = spec.threads > 0 ? spec.threads : static_cast<int>(std::thread::hardware_concurrency());
    const int workers = std::max(1, std::min<int>(want, static_cast<int>(spec.trials)));

    struct Partial {
        std::int64_t accepts = 0;
        std::int64_t peak_bits = 0;
        std::int64_t runtime_us = 0;
        std::string error;
    };
    std::vector<Partial> partials(static_cast<std::size_t>(workers));

    auto work = [&](int w) {
        Partial& part = partials[static_cast<std::size_t>(w)];
        for (std::int64_t t = w; t < spec.trials; t += workers) {
            try {
                const TrialOutcome out = run_one_trial(spec, record, t);
                if (out.accept) ++part.accepts;
                part.peak_bits = std::max(part.peak_bits, out.peak_bits);
                part.runtime_us += out.runtime_us;
            } catch (const Error& e) {
                if (part.error.empty()) part.error = e.what();
                return;
            }
        }
    };

    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }

    ErrorRateReport report;
    report.trials = spec.trials;
    for (const auto& part : partials) {
        report.accepts += part.accepts;
        report.peak_bits = std::max(report.peak_bits, part.peak_bits);
        report.mean_runtime_ms += static_cast<double>(part.runtime_us);
        if (!part.error.empty() && !report.failed) {
            report.failed = true;
            report.failure = part.error;
        }
    }
    if (report.failed) return report;
    report.rejects = report.trials - report.accepts;
    report.accept_rate = static_cast<double>(report.accepts) / static_cast<double>(report.trials);
    report.accept_se =
        std::sqrt(report.accept_rate * (1.0 - report.accept_rate) / static_cast<double>(report.trials));
    report.mean_runtime_ms = spec.timing ? report.mean_runtime_ms / (1000.0 * static_cast<double>(report.trials))
                                         : 0.0;
    return report;
}

namespace {

std::string format_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string format_eps(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

} // namespace

void write_csv_header(std::ostream& os) {
    os << "algo,k,eps,n,m,family,trials,accept_rate,accept_se,peak_bits,mean_runtime_ms,seed\n";
}

void write_csv_row(std::ostream& os, const ExperimentSpec& spec, const std::string& family_label,
                   const ErrorRateReport& report) {
    os << to_string(spec.algo) << ',' << spec.params.k << ',' << format_eps(spec.params.eps) << ','
       << spec.params.n << ',' << spec.params.m << ',' << family_label << ',' << report.trials << ','
       << format_fixed(report.accept_rate, 6) << ',' << format_fixed(report.accept_se, 6) << ','
       << report.peak_bits << ',' << format_fixed(report.mean_runtime_ms, 3) << ',' << spec.master_seed
       << '\n';
}

std::string report_csv(const ExperimentSpec& spec, const ErrorRateReport& report) {
    std::ostringstream os;
    write_csv_header(os);
    std::string label = spec.family.label();
    if (spec.algo == Algo::Closeness && spec.family_q)
        label += "|" + spec.family_q->label();
    write_csv_row(os, spec, label, report);
    return os.str();
}

std::vector<SweepRow> sweep_tradeoff(const std::vector<SweepPoint>& points, std::int64_t k, double eps,
                                     Algo algo, std::int64_t trials, std::uint64_t master_seed,
                                     const CalibrationRecord* record, int threads) {
    std::vector<SweepRow> rows;
    std::uint64_t point_id = 0;
    for (const auto& pt : points) {
        for (const bool far_family : {false, true}) {
            SweepRow row;
            row.point = pt;
            ExperimentSpec spec;
            spec.algo = algo;
            spec.params = {k, eps, pt.n, pt.m};
            spec.family = parse_family(far_family ? "paninski" : "uniform");
            if (algo == Algo::Closeness) {
                spec.family = parse_family("uniform");
                if (far_family) spec.family_q = parse_family("paninski");
            }
            spec.trials = trials;
            spec.master_seed = derive_seed(master_seed, point_id);
            spec.threads = threads;
            row.family_label = algo == Algo::Closeness
                                   ? (far_family ? "uniform|paninski" : "uniform|uniform")
                                   : spec.family.label();
            try {
                validate_params(spec.params);
            } catch (const Error&) {
                row.status = "SKIPPED_REGIME";
                rows.push_back(row);
                ++point_id;
                continue;
            }
            try {
                row.report = run_experiment(spec, record);
                row.status = row.report.failed ? "FAILED" : "OK";
            } catch (const Error& e) {
                row.status = "FAILED";
                row.report.failure = e.what();
            }
            rows.push_back(row);
            ++point_id;
        }
    }
    return rows;
}

void write_sweep_csv(std::ostream& os, std::int64_t k, double eps, Algo algo, std::int64_t trials,
                     std::uint64_t master_seed, const std::vector<SweepRow>& rows) {
    os << "algo,k,eps,n,m,family,trials,accept_rate,accept_se,peak_bits,mean_runtime_ms,seed,status\n";
    for (const auto& row : rows) {
        os << to_string(algo) << ',' << k << ',' << format_eps(eps) << ',' << row.point.n << ','
           << row.point.m << ',' << row.family_label << ',' << trials << ','
           << format_fixed(row.report.accept_rate, 6) << ',' << format_fixed(row.report.accept_se, 6) << ','
           << row.report.peak_bits << ',' << format_fixed(row.report.mean_runtime_ms, 3) << ','
           << master_seed << ',' << row.status << '\n';
    }
    os << "# " << monotonicity_summary(rows) << '\n';
}

std::string monotonicity_summary(const std::vector<SweepRow>& rows) {
    // Minimal n per budget at which both error rates stay within 1/3.
    std::map<std::int64_t, std::map<std::int64_t, std::pair<bool, bool>>> by_m;
    for (const auto& row : rows) {
        if (row.status != "OK") continue;
        auto& slot = by_m[row.point.m][row.point.n];
        const bool null_family =
            row.family_label == "uniform" || row.family_label == "uniform|uniform";
        if (null_family) slot.first = row.report.accept_rate >= 2.0 / 3.0;
        else slot.second = (1.0 - row.report.accept_rate) >= 2.0 / 3.0;
    }
    std::vector<std::pair<std::int64_t, std::int64_t>> minimal; // (m, minimal passing n)
    for (const auto& [m, by_n] : by_m) {
        std::int64_t best = -1;
        for (const auto& [n, ok] : by_n)
            if (ok.first && ok.second && (best < 0 || n < best)) best = n;
        if (best >= 0) minimal.emplace_back(m, best);
    }
    if (minimal.size() < 2) return "monotonicity: not enough passing budgets to compare";
    for (std::size_t i = 1; i < minimal.size(); ++i)
        if (minimal[i].second > minimal[i - 1].second)
            return "monotonicity: VIOLATED at m=" + std::to_string(minimal[i].first);
    return "monotonicity: OK (larger m never needs larger minimal passing n)";
}

} // namespace streamtest
