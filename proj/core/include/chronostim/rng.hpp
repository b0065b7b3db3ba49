#pragma once

// Counter-based deterministic random streams. Every stochastic quantity in
// the library is a pure function of (seed, stream id, counter), so grid cells
// and simulation replicates can be evaluated in any order, on any number of
// workers, and still produce bit-identical results.

#include <cmath>
#include <cstdint>

namespace chronostim::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// splitmix64 finalizer; full-avalanche 64-bit mix.
constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive a child key from a parent key and a stream/counter index.
constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t index) {
    return mix(key ^ mix(index + kGolden));
}

constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t a, std::uint64_t b) {
    return derive(derive(key, a), b);
}

/// Map a 64-bit word to a double in [0, 1).
constexpr double to_unit(std::uint64_t word) {
    return static_cast<double>(word >> 11) * 0x1.0p-53;
}

/// Sequential splitmix64 stream rooted at a derived key.
class Stream {
public:
    explicit Stream(std::uint64_t key) : state_(key) {}

    std::uint64_t next_u64() {
        state_ += kGolden;
        return mix(state_);
    }

    /// Uniform in [0, 1).
    double next_unit() { return to_unit(next_u64()); }

    /// Uniform in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Standard exponential.
    double next_exponential() { return -std::log1p(-next_unit()); }

    /// Approximately standard normal (sum of 12 uniforms; ample for noise floors).
    double next_gaussian() {
        double s = 0.0;
        for (int i = 0; i < 12; ++i) s += next_unit();
        return s - 6.0;
    }

    Stream fork(std::uint64_t index) const { return Stream(derive(state_, index)); }

private:
    std::uint64_t state_;
};

}  // namespace chronostim::rng
