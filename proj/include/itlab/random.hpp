#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace itlab {

/// The engine is fully specified by the standard, so trajectories are
/// reproducible across toolchains. Distributions below are hand-written for
/// the same reason (std:: distributions are implementation-defined).
using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based child seed: (seed, index) -> independent stream seed.
/// Adding new indices never changes the seeds of existing ones.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n), unbiased (rejection sampling).
inline std::size_t uniform_index(Rng& rng, std::size_t n)
{
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max()
                                - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return static_cast<std::size_t>(r % bound);
}

inline double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Standard normal via Box-Muller (one draw per call, the pair's second half is dropped).
inline double standard_normal(Rng& rng)
{
    double u1 = uniform01(rng);
    while (u1 <= 0.0)
        u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Draw an index from unnormalized nonnegative weights by inverse CDF.
inline std::size_t sample_categorical(Rng& rng, std::span<const double> weights)
{
    double total = 0.0;
    for (double w : weights)
        total += w;
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0)
            continue;
        acc += weights[i];
        last_positive = i;
        if (target < acc)
            return i;
    }
    return last_positive;
}

template <typename T>
void shuffle(Rng& rng, std::vector<T>& values)
{
    for (std::size_t i = values.size(); i > 1; --i)
        std::swap(values[i - 1], values[uniform_index(rng, i)]);
}

/// Precomputed cumulative table for repeated draws from a fixed distribution.
class CategoricalSampler {
public:
    explicit CategoricalSampler(std::span<const double> weights)
    {
        cumulative_.reserve(weights.size());
        double acc = 0.0;
        for (double w : weights) {
            acc += w > 0.0 ? w : 0.0;
            cumulative_.push_back(acc);
        }
    }

    std::size_t operator()(Rng& rng) const
    {
        const double target = uniform01(rng) * cumulative_.back();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
        if (it == cumulative_.end())
            --it;
        return static_cast<std::size_t>(it - cumulative_.begin());
    }

private:
    std::vector<double> cumulative_;
};

} // namespace itlab
