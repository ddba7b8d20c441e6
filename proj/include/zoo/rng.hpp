#pragma once

#include <cstdint>

namespace zoo {

/// xorshift64* (shifts 12/25/27, multiplier 0x2545F4914F6CDD1D) seeded
/// through one splitmix64 step so that seed 0 is usable. Output is fully
/// determined by the seed on every platform.
class XorShift64Star {
public:
    explicit XorShift64Star(std::uint64_t seed) {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        state_ = z ^ (z >> 31);
        if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
    }

    std::uint64_t next() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1DULL;
    }

    /// Uniform in [0, 1) with 24 bits of resolution, exact in f32.
    float unit() { return static_cast<float>(next() >> 40) * 0x1.0p-24f; }

    /// Uniform in [low, high]; evaluated in f32 with a single rounding per
    /// operation so results do not depend on FMA contraction.
    float uniform(float low, float high) {
        const float span = high - low;
        const float scaled = span * unit();
        return low + scaled;
    }

private:
    std::uint64_t state_;
};

}  // namespace zoo
