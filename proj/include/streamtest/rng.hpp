#pragma once

#include <cstdint>
#include <limits>

namespace streamtest {

// SplitMix64 finalizer; the workhorse for counter-based generation.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Value of the counter-based stream `seed` at position `index`.
// Random access makes streams reproducible and trials splittable.
inline std::uint64_t value_at(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed + (index + 1) * kGolden);
}

// Independent child seed for (master, id); used for per-trial and
// per-repetition seed derivation.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t id) {
    return mix64(mix64(master ^ 0xA0761D6478BD642FULL) + (id + 1) * kGolden);
}

// Top 53 bits -> [0, 1).
inline double uniform01(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Sequential counter-based generator; usable as a std URBG.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    result_type operator()() { return value_at(seed_, index_++); }
    double next_double() { return uniform01((*this)()); }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

private:
    std::uint64_t seed_;
    std::uint64_t index_ = 0;
};

} // namespace streamtest
