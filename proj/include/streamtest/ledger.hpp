#pragma once

#include <bit>
#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "streamtest/common.hpp"

namespace streamtest {

// Width of a register that must represent every value in {0, ..., max_value}:
// ceil(log2(max_value + 1)), with a 1-bit floor.
inline std::int64_t bits_for_counter(std::uint64_t max_value) {
    if (max_value == 0) return 1;
    return static_cast<std::int64_t>(std::bit_width(max_value));
}

// ceil(log2(x)) for x >= 1.
inline std::int64_t ceil_log2(std::uint64_t x) {
    if (x <= 1) return 0;
    return static_cast<std::int64_t>(std::bit_width(x - 1));
}

// Smallest b >= 0 with 2^b >= 1/eps, i.e. ceil(log2(1/eps)); eps in (0, 1].
inline std::int64_t ceil_log2_inverse(double eps) {
    std::int64_t b = 0;
    double scaled = eps;
    while (scaled < 1.0) {
        scaled *= 2.0; // exact: scaling by a power of two
        ++b;
    }
    return b;
}

// Running account of the bits of data-dependent tester state, enforced
// against a fixed budget. Every charge and release is labeled and logged;
// the log can be exported as CSV for audit.
//
// Convention: data registers (sample buffers, statistic accumulators,
// count arrays, partition seeds, accept tallies) are charged; O(1) control
// state (program counter, thresholds and loop positions derivable from the
// provided problem parameters) is not.
class BitLedger {
public:
    struct Event {
        std::string label;
        std::int64_t bits;
        bool is_charge;
        std::int64_t running_total;
    };

    explicit BitLedger(std::int64_t budget_bits) : budget_(budget_bits) {}

    // Adds a labeled charge; fails with BUDGET_EXCEEDED (reporting the
    // overshoot) if the running total would pass the budget.
    void charge(const std::string& label, std::int64_t bits);

    // Removes a previously charged label; the peak is unaffected.
    void release(const std::string& label);

    std::int64_t budget_bits() const { return budget_; }
    std::int64_t current_bits() const { return current_; }
    std::int64_t peak_bits() const { return peak_; }

    const std::vector<Event>& log() const { return log_; }

    // One row per event: label,bits,event,running_total.
    void write_csv(std::ostream& os) const;

private:
    std::int64_t budget_;
    std::int64_t current_ = 0;
    std::int64_t peak_ = 0;
    std::unordered_map<std::string, std::int64_t> active_;
    std::vector<Event> log_;
};

} // namespace streamtest
