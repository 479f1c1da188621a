#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wavelearn/rng.hpp"

namespace wavelearn {

using cplx = std::complex<double>;

// Point i carries the bit label given by the K-bit MSB-first binary
// expansion of i.
struct RawConstellation {
    std::vector<cplx> points;
    int bits_per_symbol = 0;
};

// Centered, unit average energy.
struct Constellation {
    std::vector<cplx> points;
    int bits_per_symbol = 0;

    std::size_t size() const { return points.size(); }
    std::string label(std::size_t index) const;
};

// N x K matrix of bits, row-major.
struct BitBlock {
    std::size_t rows = 0;
    int bits_per_symbol = 0;
    std::vector<std::uint8_t> bits;

    BitBlock() = default;
    BitBlock(std::size_t n, int k) : rows(n), bits_per_symbol(k), bits(n * static_cast<std::size_t>(k), 0) {}

    std::uint8_t& operator()(std::size_t n, int k) { return bits[n * bits_per_symbol + k]; }
    std::uint8_t operator()(std::size_t n, int k) const { return bits[n * bits_per_symbol + k]; }

    // MSB-first integer formed by row n.
    std::size_t symbol_index(std::size_t n) const;

    static BitBlock random(std::size_t n, int k, Rng& rng);
};

// N x K log-likelihood ratios, row-major. Positive values favor bit 1.
struct LlrBlock {
    std::size_t rows = 0;
    int bits_per_symbol = 0;
    std::vector<double> values;

    LlrBlock() = default;
    LlrBlock(std::size_t n, int k) : rows(n), bits_per_symbol(k), values(n * static_cast<std::size_t>(k), 0.0) {}

    double& operator()(std::size_t n, int k) { return values[n * bits_per_symbol + k]; }
    double operator()(std::size_t n, int k) const { return values[n * bits_per_symbol + k]; }
};

// Subtract the mean and divide by the standard deviation of the point set.
// Throws ZeroVarianceError when all points coincide.
Constellation normalize_constellation(const RawConstellation& raw);

// Square Gray-labeled QAM for K in {2, 4, 6}; odd K throws UnsupportedError.
Constellation qam_gray(int bits_per_symbol);

std::vector<cplx> map_bits(const BitBlock& block, const Constellation& c);

// Nearest-point decision, returned as bits.
BitBlock hard_decision(std::span<const cplx> r, const Constellation& c);

// Exact per-bit posterior LLRs for r = s + CN(0, noise_var).
LlrBlock exact_awgn_llrs(std::span<const cplx> r, const Constellation& c, double noise_var);

}  // namespace wavelearn
