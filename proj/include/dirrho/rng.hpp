#ifndef DIRRHO_RNG_HPP
#define DIRRHO_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace dirrho {

/// Default master seed used when neither a flag nor DIRRHO_SEED is given.
inline constexpr std::uint64_t kDefaultSeed = 42;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based sub-stream derivation: the same (master, a, b) triple always
/// yields the same seed, and distinct triples yield independent-looking seeds.
/// Parallel code must derive one engine per (cell, replicate) or (seed, chunk)
/// stream instead of sharing a mutable generator.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    s = h ^ (a * 0xd6e8feb86659fd93ULL + 0x2545f4914f6cdd1dULL);
    h = splitmix64(s);
    s = h ^ (b * 0xa0761d6478bd642fULL + 0xe7037ed1a0b428dbULL);
    return splitmix64(s);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) { return std::mt19937_64(seed); }

/// Uniform draw strictly inside (0,1).
inline double unit_open(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}

inline double exponential_draw(std::mt19937_64& rng) { return -std::log(unit_open(rng)); }

inline double normal_draw(std::mt19937_64& rng) {
    // Box-Muller, one value per call; the second value is discarded so the
    // draw count per call is fixed.
    double u1 = unit_open(rng);
    double u2 = unit_open(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

/// Gamma(shape, 1) via Marsaglia-Tsang squeeze; shape < 1 is boosted through
/// Gamma(shape+1) * U^(1/shape).
inline double gamma_draw(std::mt19937_64& rng, double shape) {
    if (shape < 1.0) {
        double g = gamma_draw(rng, shape + 1.0);
        return g * std::pow(unit_open(rng), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal_draw(rng);
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = unit_open(rng);
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

} // namespace dirrho

#endif
