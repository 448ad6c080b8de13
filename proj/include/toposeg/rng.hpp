#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace toposeg {

/// Deterministic draws on top of mt19937_64. Distribution shapes are coded
/// here instead of <random> adaptors so that seeded streams are identical
/// across standard library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return n <= 1 ? 0 : engine_() % n; }

    /// Uniform integer in [lo, hi] inclusive.
    int64_t range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
    }

    bool coin() { return (engine_() & 1) != 0; }

    /// Uniform double in [0, 1).
    double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (no cached second value).
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace toposeg
