#pragma once

/*
 * Pinned pseudo-random machinery used everywhere randomness is needed.
 *
 * Every stochastic operation in this library draws from a Xoshiro256++
 * generator seeded through SplitMix64, so a run is reproducible
 * bit-for-bit from a single 64-bit seed. The constants are the standard
 * ones from Blackman & Vigna's reference implementations.
 *
 * Derived quantities are pinned too:
 *   - uniform doubles take the top 53 bits: (x >> 11) * 2^-53, in [0, 1)
 *   - normals use Box-Muller on two consecutive uniforms,
 *     z = sqrt(-2 ln(1-u1)) * cos(2 pi u2); each call consumes exactly
 *     two raw draws and returns one variate
 *   - named sub-streams come from splitmix64(seed ^ fnv1a64(label))
 */

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace cobrnn {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& s : state_) s = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    /// Standard normal via Box-Muller; consumes two raw draws per call.
    double normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(1.0 - u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Uniform index in [0, n); n must be > 0. Modulo bias is accepted
    /// as part of the pinned contract (n is tiny next to 2^64 here).
    std::uint64_t below(std::uint64_t n) { return next() % n; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_;
};

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const void* bytes, std::size_t n) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Seed for a named sub-stream of a run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    return SplitMix64(seed ^ fnv1a64(label)).next();
}

/// Generator for a named sub-stream of a run seed.
inline Xoshiro256pp derive_stream(std::uint64_t seed, std::string_view label) {
    return Xoshiro256pp(derive_seed(seed, label));
}

}  // namespace cobrnn
