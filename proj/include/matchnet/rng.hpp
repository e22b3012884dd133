#ifndef MATCHNET_RNG_HPP
#define MATCHNET_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace matchnet {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream derivation: the seed of sub-stream `stream` of a master `seed`.
/// hash64(s, i) = splitmix64(splitmix64(s) ^ splitmix64(i + 0x632be59bd9b4e019)).
/// Depends only on (seed, stream), so ensembles are reproducible whatever order
/// the runs are executed in.
constexpr std::uint64_t hash64(std::uint64_t seed, std::uint64_t stream) noexcept
{
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Random stream owned by exactly one trajectory or sampler.
///
/// Wraps std::mt19937_64 (whose output sequence is fixed by the standard) and
/// derives every variate from raw 64-bit words with explicit formulas, so
/// results do not depend on the standard library's distribution classes.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }

    result_type operator()() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Exponential with the given rate (> 0).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Uniform integer on [0, n), n >= 1. Multiply-shift; bias below 2^-64 * n.
    std::uint64_t below(std::uint64_t n)
    {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace matchnet

#endif  // MATCHNET_RNG_HPP
