#include "wavelearn/modem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wavelearn/errors.hpp"

namespace wavelearn {

std::string Constellation::label(std::size_t index) const
{
    std::string out(static_cast<std::size_t>(bits_per_symbol), '0');
    for (int k = 0; k < bits_per_symbol; ++k) {
        if ((index >> (bits_per_symbol - 1 - k)) & 1U) {
            out[static_cast<std::size_t>(k)] = '1';
        }
    }
    return out;
}

std::size_t BitBlock::symbol_index(std::size_t n) const
{
    std::size_t idx = 0;
    for (int k = 0; k < bits_per_symbol; ++k) {
        idx = (idx << 1) | (*this)(n, k);
    }
    return idx;
}

BitBlock BitBlock::random(std::size_t n, int k, Rng& rng)
{
    BitBlock b(n, k);
    for (auto& bit : b.bits) {
        bit = static_cast<std::uint8_t>(rng.bit());
    }
    return b;
}

Constellation normalize_constellation(const RawConstellation& raw)
{
    const std::size_t n = raw.points.size();
    if (n != (std::size_t{1} << raw.bits_per_symbol)) {
        std::ostringstream msg;
        msg << "constellation with K = " << raw.bits_per_symbol << " needs " << (1 << raw.bits_per_symbol)
            << " points, got " << n;
        throw DimensionError(msg.str());
    }
    cplx mean = 0.0;
    double energy = 0.0;
    for (const cplx& c : raw.points) {
        mean += c;
        energy += std::norm(c);
    }
    mean /= static_cast<double>(n);
    energy /= static_cast<double>(n);
    const double variance = energy - std::norm(mean);
    if (!(variance > 1e-300)) {
        throw ZeroVarianceError("cannot normalize a constellation whose points all coincide");
    }
    const double sd = std::sqrt(variance);
    Constellation out;
    out.bits_per_symbol = raw.bits_per_symbol;
    out.points.reserve(n);
    for (const cplx& c : raw.points) {
        out.points.push_back((c - mean) / sd);
    }
    return out;
}

Constellation qam_gray(int bits_per_symbol)
{
    if (bits_per_symbol % 2 != 0 || bits_per_symbol < 2 || bits_per_symbol > 6) {
        throw UnsupportedError("Gray QAM is provided for K in {2, 4, 6}");
    }
    const int half = bits_per_symbol / 2;
    const int levels = 1 << half;
    // Position p along an axis carries Gray code p ^ (p >> 1); invert it.
    std::vector<int> position(static_cast<std::size_t>(levels));
    for (int p = 0; p < levels; ++p) {
        position[static_cast<std::size_t>(p ^ (p >> 1))] = p;
    }
    const double scale = std::sqrt(2.0 * (levels * levels - 1) / 3.0);
    Constellation out;
    out.bits_per_symbol = bits_per_symbol;
    for (int i = 0; i < (1 << bits_per_symbol); ++i) {
        const int hi = i >> half;
        const int lo = i & (levels - 1);
        const double re = 2.0 * position[static_cast<std::size_t>(hi)] - (levels - 1);
        const double im = 2.0 * position[static_cast<std::size_t>(lo)] - (levels - 1);
        out.points.emplace_back(re / scale, im / scale);
    }
    return out;
}

std::vector<cplx> map_bits(const BitBlock& block, const Constellation& c)
{
    if (block.bits_per_symbol != c.bits_per_symbol) {
        throw DimensionError("bit block and constellation disagree on bits per symbol");
    }
    std::vector<cplx> s(block.rows);
    for (std::size_t n = 0; n < block.rows; ++n) {
        s[n] = c.points[block.symbol_index(n)];
    }
    return s;
}

BitBlock hard_decision(std::span<const cplx> r, const Constellation& c)
{
    BitBlock out(r.size(), c.bits_per_symbol);
    for (std::size_t n = 0; n < r.size(); ++n) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double d = std::norm(r[n] - c.points[i]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        for (int k = 0; k < c.bits_per_symbol; ++k) {
            out(n, k) = static_cast<std::uint8_t>((best >> (c.bits_per_symbol - 1 - k)) & 1U);
        }
    }
    return out;
}

LlrBlock exact_awgn_llrs(std::span<const cplx> r, const Constellation& c, double noise_var)
{
    if (!(noise_var > 0.0)) {
        throw ConfigError("exact demapper needs a positive noise variance");
    }
    const int k_bits = c.bits_per_symbol;
    const std::size_t m = c.size();
    LlrBlock out(r.size(), k_bits);
    std::vector<double> metric(m);
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();

    for (std::size_t n = 0; n < r.size(); ++n) {
        for (std::size_t i = 0; i < m; ++i) {
            metric[i] = -std::norm(r[n] - c.points[i]) / noise_var;
        }
        for (int k = 0; k < k_bits; ++k) {
            const std::size_t mask = std::size_t{1} << (k_bits - 1 - k);
            double max1 = kNegInf;
            double max0 = kNegInf;
            for (std::size_t i = 0; i < m; ++i) {
                if (i & mask) {
                    max1 = std::max(max1, metric[i]);
                } else {
                    max0 = std::max(max0, metric[i]);
                }
            }
            double sum1 = 0.0;
            double sum0 = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (i & mask) {
                    sum1 += std::exp(metric[i] - max1);
                } else {
                    sum0 += std::exp(metric[i] - max0);
                }
            }
            out(n, k) = (max1 + std::log(sum1)) - (max0 + std::log(sum0));
        }
    }
    return out;
}

}  // namespace wavelearn
