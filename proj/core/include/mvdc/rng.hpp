#pragma once

#include <cmath>
#include <cstdint>

namespace mvdc {

/// Counter-based 64-bit generator (splitmix64 finalizer over seed + counter).
/// Streams are reproducible across platforms and independent of call sites:
/// value i of seed s is a pure function of (s, i).
class CounterRng {
 public:
    explicit CounterRng(uint64_t seed) : seed_(seed) {}

    uint64_t next_u64() {
        uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Standard normal via Box-Muller. Consumes two counter values.
    double gaussian() {
        const double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return next_u64() % n; }

    uint64_t counter() const { return counter_; }

 private:
    uint64_t seed_;
    uint64_t counter_ = 0;
};

}  // namespace mvdc
