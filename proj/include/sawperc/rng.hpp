#pragma once

// Counter-based random values: every draw is a pure function of
// (seed, counter), so sampling order and task count never matter.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sawperc {

/// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// Purposes of derived streams; keeps unrelated draws decorrelated.
enum class StreamTag : std::uint64_t {
    Environment = 1,
    Potential = 2,
    Conditional = 3,
    NestedInner = 4,
    Animal = 5,
    Estimator = 6,
};

/// Seed of the index-th stream of a given purpose.
constexpr std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag, std::uint64_t index) noexcept
{
    std::uint64_t h = mix64(seed + kGolden * (static_cast<std::uint64_t>(tag) + 1));
    return mix64(h ^ mix64(index + 0x632be59bd9b4e019ULL));
}

class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t seed) noexcept : key_(mix64(seed ^ 0x5851f42d4c957f2dULL)) {}

    constexpr std::uint64_t bits(std::uint64_t counter) const noexcept
    {
        return mix64(key_ + kGolden * (counter + 1)) ^ mix64(counter ^ key_);
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    constexpr double uniform(std::uint64_t counter) const noexcept
    {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on two derived counters.
    double normal(std::uint64_t counter) const noexcept
    {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t key_;
};

} // namespace sawperc
