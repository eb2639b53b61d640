#include "streamtest/ledger.hpp"

namespace streamtest {

void BitLedger::charge(const std::string& label, std::int64_t bits) {
    if (bits < 0) fail(Errc::invalid_argument, "charge: negative bit count for '" + label + "'");
    if (active_.count(label) > 0)
        fail(Errc::duplicate_label, "charge: label '" + label + "' already charged");
    if (current_ + bits > budget_) {
        const std::int64_t overshoot = current_ + bits - budget_;
        fail(Errc::budget_exceeded, "BUDGET_EXCEEDED: charging '" + label + "' (" +
                                        std::to_string(bits) + " bits) overshoots budget " +
                                        std::to_string(budget_) + " by " + std::to_string(overshoot));
    }
    active_.emplace(label, bits);
    current_ += bits;
    if (current_ > peak_) peak_ = current_;
    log_.push_back({label, bits, true, current_});
}

void BitLedger::release(const std::string& label) {
    auto it = active_.find(label);
    if (it == active_.end()) fail(Errc::unknown_label, "release: label '" + label + "' not charged");
    const std::int64_t bits = it->second;
    current_ -= bits;
    active_.erase(it);
    log_.push_back({label, bits, false, current_});
}

void BitLedger::write_csv(std::ostream& os) const {
    os << "label,bits,event,running_total\n";
    for (const auto& e : log_)
        os << e.label << ',' << e.bits << ',' << (e.is_charge ? "charge" : "release") << ','
           << e.running_total << '\n';
}

} // namespace streamtest
