// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace voxgen {

/// splitmix64 (Steele/Lea/Vigna, public-domain reference at
/// prng.di.unimi.it/splitmix64.c). Chosen over the platform engines because
/// the output sequence is fixed by the algorithm, so seeds reproduce
/// bit-identically everywhere.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    /// Output finalizer; also usable standalone as a 64-bit mixer.
    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next() { return mix(state_ += kGamma); }

    /// Uniform in [0,1) with 53 random bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform float in [0,1) with 24 random bits (exact in binary32).
    float next_unit_float() {
        return static_cast<float>(next() >> 40) * 0x1.0p-24f;
    }

    /// Uniform integer in {0,...,bound-1} via the multiply-shift reduction
    /// (Lemire); bias is below bound/2^64 and irrelevant at our ranges.
    std::uint64_t next_below(std::uint64_t bound) {
        using u128 = unsigned __int128;
        return static_cast<std::uint64_t>(
            (static_cast<u128>(next()) * static_cast<u128>(bound)) >> 64);
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

/// Standard-normal draws addressable by stream index: sample(i) equals what a
/// sequential SplitMix64(seed) would produce for the i-th voxel, but can be
/// evaluated for any index independently. Box-Muller over output pairs
/// (2i, 2i+1) of the stream.
class GaussianField {
public:
    explicit GaussianField(std::uint64_t seed) : seed_(seed) {}

    double sample(std::uint64_t index) const {
        const std::uint64_t a =
            SplitMix64::mix(seed_ + (2 * index + 1) * SplitMix64::kGamma);
        const std::uint64_t b =
            SplitMix64::mix(seed_ + (2 * index + 2) * SplitMix64::kGamma);
        // u1 in (0,1] so the log is finite; u2 in [0,1).
        const double u1 = 1.0 - static_cast<double>(a >> 11) * 0x1.0p-53;
        const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

} // namespace voxgen
