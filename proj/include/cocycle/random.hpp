#pragma once

// Seeded sampling. Every stochastic quantity is a pure function of (seed, stream, index),
// so samples can be drawn in any order on any number of threads.

#include "cocycle/rotation.hpp"

#include <cstdint>
#include <random>

namespace cocycle {

/// SplitMix64 finaliser; used only to derive independent per-sample seeds.
constexpr std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

enum class Stream : std::uint64_t {
    theta = 1,
    omega = 2,
    calibration = 3,
    correlation = 4,
};

constexpr std::uint64_t sample_seed(std::uint64_t seed, Stream stream, std::uint64_t index)
{
    return mix64(mix64(seed ^ mix64(static_cast<std::uint64_t>(stream))) + index);
}

/// Raw std::mt19937_64 draws only; no std::*_distribution adaptors.
class SampleRng {
public:
    explicit SampleRng(std::uint64_t seed) : engine_(seed) {}
    SampleRng(std::uint64_t seed, Stream stream, std::uint64_t index)
        : engine_(sample_seed(seed, stream, index))
    {
    }

    std::uint64_t next() { return engine_(); }

    FixedAngle angle()
    {
        const u128 hi = engine_();
        const u128 lo = engine_();
        return FixedAngle{(hi << 64) | lo};
    }

    /// Uniform +-1 drawn from 64 buffered bits.
    int sign()
    {
        if (bits_left_ == 0) {
            buffer_ = engine_();
            bits_left_ = 64;
        }
        const int s = (buffer_ & 1u) ? 1 : -1;
        buffer_ >>= 1;
        --bits_left_;
        return s;
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t buffer_ = 0;
    int bits_left_ = 0;
};

/// Uniform angles for sample i of a theta stream.
inline FixedAngle sample_theta(std::uint64_t seed, std::uint64_t index)
{
    return SampleRng(seed, Stream::theta, index).angle();
}

} // namespace cocycle
