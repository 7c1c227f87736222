#pragma once

#include <cstdint>

namespace dosnet {

/// SplitMix64 (Steele, Lea & Flood 2014; the seeding generator of
/// xoshiro/java.util.SplittableRandom). Streams depend only on the 64-bit
/// seed, so recorded seeds reproduce bit-identically on every platform.
/// Uniform reals take the top 53 bits: u = (x >> 11) * 2^-53 in [0, 1).
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    constexpr double uniform01() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi]; returns lo exactly when lo == hi.
    constexpr double uniform(double lo, double hi) noexcept {
        return lo == hi ? lo : lo + (hi - lo) * uniform01();
    }

    /// Independent child stream; advances this generator by one draw.
    constexpr SplitMix64 split() noexcept { return SplitMix64(next() ^ 0x5851F42D4C957F2DULL); }

private:
    std::uint64_t state_;
};

}  // namespace dosnet
