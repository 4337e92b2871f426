#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mcast {

/// Engine plus hand-rolled draws, so sequences do not depend on the standard
/// library's distribution implementations.
using Rng = std::mt19937_64;

inline double uniform01(Rng &rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

inline double uniform(Rng &rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Unit-mean exponential variate.
inline double exponential(Rng &rng) { return -std::log1p(-uniform01(rng)); }

inline bool bernoulli(Rng &rng, double p) { return uniform01(rng) < p; }

/// Uniform integer in [0, n), by rejection.
inline std::uint64_t uniform_index(Rng &rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

/// splitmix64 finalizer; derives independent stream seeds from one run seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace mcast
