#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace wavelearn {

// Deterministic random source. Independent streams are derived from
// (seed, stream id) by a splitmix64 hash so batch items and Monte Carlo
// shards never share a sequence.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream);

    // Child stream; does not advance this generator.
    Rng fork(std::uint64_t stream) const { return Rng(seed_, stream_ * 0x9E3779B97F4A7C15ULL + stream + 1); }

    double uniform();                        // [0, 1)
    double uniform(double lo, double hi);    // [lo, hi)
    double normal();                         // N(0, 1)
    std::complex<double> complex_normal(double variance = 1.0);  // CN(0, variance)
    std::uint64_t integer(std::uint64_t bound);  // [0, bound)
    int bit() { return static_cast<int>(integer(2)); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace wavelearn
