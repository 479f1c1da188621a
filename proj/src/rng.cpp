#include "wavelearn/rng.hpp"

#include <cmath>

namespace wavelearn {

std::uint64_t Rng::mix(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(mix(seed, stream))
{
}

double Rng::uniform()
{
    // 53 random bits -> [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi)
{
    return lo + (hi - lo) * uniform();
}

double Rng::normal()
{
    return normal_(engine_);
}

std::complex<double> Rng::complex_normal(double variance)
{
    const double sigma = std::sqrt(0.5 * variance);
    const double re = normal();
    const double im = normal();
    return {sigma * re, sigma * im};
}

std::uint64_t Rng::integer(std::uint64_t bound)
{
    // Rejection sampling keeps the draw unbiased and platform independent.
    const std::uint64_t limit = bound * (~std::uint64_t{0} / bound);
    std::uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % bound;
}

}  // namespace wavelearn
