#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "streamtest/batch.hpp"
#include "streamtest/calibration.hpp"
#include "streamtest/core.hpp"

namespace streamtest {

enum class Algo { Batch, Compress, Closeness };

const char* to_string(Algo a);
Algo parse_algo(const std::string& name);

// Instance family for simulation. `eps` defaults to the experiment's eps,
// `support` to k/2, `atom` to 0.
struct FamilySpec {
    enum class Kind { Uniform, Paninski, Subset, PointMass, PmfFile };
    Kind kind = Kind::Uniform;
    double eps = -1.0;
    std::int64_t support = -1;
    std::int64_t atom = 0;
    std::string path;

    std::string label() const;
};

FamilySpec parse_family(const std::string& name);
Pmf build_family(const FamilySpec& family, std::int64_t k, double default_eps);

struct ExperimentSpec {
    Algo algo = Algo::Batch;
    ProblemParams params;
    FamilySpec family;                   // source of stream p
    std::optional<FamilySpec> family_q;  // closeness only; defaults to `family`
    std::int64_t trials = 1;
    std::uint64_t master_seed = 0;
    int threads = 0;       // 0: hardware concurrency
    bool timing = false;   // wall-clock timing is opt-in so output stays reproducible
    std::optional<BatchPlan> batch_plan; // expert override of the derived plan
};

struct ErrorRateReport {
    std::int64_t trials = 0;
    std::int64_t accepts = 0;
    std::int64_t rejects = 0;
    double accept_rate = 0.0;
    double accept_se = 0.0;     // binomial standard error
    std::int64_t peak_bits = 0; // max ledger peak over trials
    double mean_runtime_ms = 0.0;
    bool failed = false; // ledger breach or per-trial error
    std::string failure;
};

// Runs `trials` independent seeded trials (order-independent parallel fold)
// and aggregates. A budget breach in any trial flags the report FAILED
// rather than producing a verdict.
ErrorRateReport run_experiment(const ExperimentSpec& spec, const CalibrationRecord* record);

// CSV with the fixed column set. `family_label` names the instance family
// of this row.
void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const ExperimentSpec& spec, const std::string& family_label,
                   const ErrorRateReport& report);
std::string report_csv(const ExperimentSpec& spec, const ErrorRateReport& report);

struct SweepPoint {
    std::int64_t m = 0;
    std::int64_t n = 0;
};

struct SweepRow {
    SweepPoint point;
    std::string family_label;
    std::string status; // OK | SKIPPED_REGIME | FAILED
    ErrorRateReport report;
};

// For each (m, n) point runs the uniform (null) and far families and
// reports both error rates; out-of-regime points are recorded, not run.
std::vector<SweepRow> sweep_tradeoff(const std::vector<SweepPoint>& points, std::int64_t k, double eps,
                                     Algo algo, std::int64_t trials, std::uint64_t master_seed,
                                     const CalibrationRecord* record, int threads = 0);

void write_sweep_csv(std::ostream& os, std::int64_t k, double eps, Algo algo, std::int64_t trials,
                     std::uint64_t master_seed, const std::vector<SweepRow>& rows);

// "larger m never needs a larger minimal passing n" over the sweep rows.
std::string monotonicity_summary(const std::vector<SweepRow>& rows);

} // namespace streamtest
