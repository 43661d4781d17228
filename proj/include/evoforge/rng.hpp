#pragma once

#include <cstdint>
#include <random>

namespace evoforge {

// All randomness in the project draws from mt19937_64 through the helpers
// below. The standard distributions are implementation-defined, so using
// them would make seeded runs differ between standard libraries; these
// mappings are fixed.
using Rng = std::mt19937_64;

// Uniform integer in [0, n). n must be > 0.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    // Rejection sampling over the top multiple of n.
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
    std::uint64_t v = rng();
    while (v >= limit) {
        v = rng();
    }
    return v % n;
}

inline std::size_t pick_index(Rng& rng, std::size_t size) {
    return static_cast<std::size_t>(uniform_below(rng, size));
}

// Uniform real in [lo, hi) from the top 53 bits.
inline double uniform_real(Rng& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

inline bool coin_flip(Rng& rng) {
    return (rng() >> 63) != 0;
}

} // namespace evoforge
