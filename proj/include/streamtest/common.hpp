#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace streamtest {

enum class Verdict { Accept, Reject };

inline const char* to_string(Verdict v) { return v == Verdict::Accept ? "ACCEPT" : "REJECT"; }

// Error codes surfaced through exceptions; the CLI maps a subset to exit codes.
enum class Errc {
    invalid_argument,
    regime_too_small,
    regime_too_large,
    budget_exceeded,
    unknown_label,
    duplicate_label,
    out_of_range,
    length_mismatch,
    stream_exhausted,
    calibration_missing,
    io_error,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

} // namespace streamtest
