#include "wavelearn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wavelearn/errors.hpp"

namespace wavelearn {

double average_power(std::size_t block_length, double symbol_period, double duration)
{
    if (block_length < 1) {
        throw ConfigError("average power needs at least one symbol");
    }
    const auto n = static_cast<double>(block_length);
    return n / ((n - 1.0) * symbol_period + duration);
}

PowerSamples PowerSamples::draw(double duration, double symbol_period, std::size_t constellation_size,
                                std::size_t count, Rng& rng)
{
    PowerSamples out;
    out.duration = duration;
    out.symbol_period = symbol_period;
    out.reach = static_cast<int>(std::ceil(duration / symbol_period - 1e-12));
    out.times.resize(count);
    out.symbols.resize(count * out.span());
    for (std::size_t i = 0; i < count; ++i) {
        out.times[i] = rng.uniform(-0.5 * symbol_period, 0.5 * symbol_period);
        for (std::size_t k = 0; k < out.span(); ++k) {
            out.symbols[i * out.span() + k] = static_cast<std::uint32_t>(rng.integer(constellation_size));
        }
    }
    return out;
}

std::vector<double> instant_powers(const FilterParams& tx, const Constellation& c, const PowerSamples& samples)
{
    const int half = tx.half_width();
    const auto ns = static_cast<std::size_t>(2 * half + 1);
    const double scale = time_scale(tx);
    const double d = tx.duration;
    std::vector<cplx> e(ns);
    std::vector<double> out(samples.count());
    for (std::size_t i = 0; i < samples.count(); ++i) {
        cplx x = 0.0;
        for (int n = -samples.reach; n <= samples.reach; ++n) {
            const double tau = samples.times[i] - n * samples.symbol_period;
            if (std::abs(tau) >= d / 2) {
                continue;
            }
            const double w = 2.0 * std::numbers::pi * tau / d;
            const cplx step = std::polar(1.0, w);
            cplx z = std::polar(1.0, -w * half);
            cplx g = 0.0;
            for (std::size_t s = 0; s < ns; ++s) {
                g += tx.coeffs(static_cast<Eigen::Index>(s)) * z;
                z *= step;
            }
            x += c.points[samples.symbols[i * samples.span() + static_cast<std::size_t>(n + samples.reach)]] * g;
        }
        out[i] = std::norm(scale * x);
    }
    return out;
}

double sample_instant_power(const FilterParams& tx, const Constellation& c, Rng& rng)
{
    const auto s = PowerSamples::draw(tx.duration, tx.symbol_period, c.size(), 1, rng);
    return instant_powers(tx, c, s).front();
}

double papr_excess(const std::vector<double>& normalized_powers, double eps_p)
{
    if (normalized_powers.empty()) {
        return 0.0;
    }
    double acc = 0.0;
    for (double p : normalized_powers) {
        acc += std::max(p - eps_p, 0.0);
    }
    return acc / static_cast<double>(normalized_powers.size());
}

namespace {
std::vector<double> normalized_powers(const FilterParams& tx, const Constellation& c, std::size_t count,
                                      std::size_t block_length, Rng& rng)
{
    const auto s = PowerSamples::draw(tx.duration, tx.symbol_period, c.size(), count, rng);
    auto p = instant_powers(tx, c, s);
    const double pbar = average_power(block_length, tx.symbol_period, tx.duration);
    for (double& v : p) {
        v /= pbar;
    }
    return p;
}
}  // namespace

double papr_excess_V(const FilterParams& tx, const Constellation& c, double eps_p, std::size_t count,
                     std::size_t block_length, Rng& rng)
{
    if (count < 1) {
        throw ConfigError("PAPR estimate needs at least one sample");
    }
    return papr_excess(normalized_powers(tx, c, count, block_length, rng), eps_p);
}

CurveSeries power_ccdf(const FilterParams& tx, const Constellation& c, const std::vector<double>& thresholds_db,
                       std::size_t num_samples, std::size_t block_length, Rng& rng)
{
    if (!std::is_sorted(thresholds_db.begin(), thresholds_db.end())) {
        throw ConfigError("CCDF thresholds must be increasing");
    }
    auto p = normalized_powers(tx, c, num_samples, block_length, rng);
    std::sort(p.begin(), p.end());
    CurveSeries out;
    out.kind = CurveSeries::Kind::ccdf;
    out.x = thresholds_db;
    for (double th_db : thresholds_db) {
        const double th = std::pow(10.0, th_db / 10.0);
        const auto above = p.end() - std::upper_bound(p.begin(), p.end(), th);
        out.y.push_back(static_cast<double>(above) / static_cast<double>(p.size()));
    }
    return out;
}

std::vector<double> psd_linear(const FilterParams& tx, const std::vector<double>& f_grid)
{
    std::vector<double> out;
    out.reserve(f_grid.size());
    for (double f : f_grid) {
        out.push_back(std::norm(eval_filter_freq(tx, f)));
    }
    return out;
}

CurveSeries analytic_psd(const FilterParams& tx, const std::vector<double>& f_grid)
{
    CurveSeries out;
    out.kind = CurveSeries::Kind::psd;
    out.x = f_grid;
    const auto lin = psd_linear(tx, f_grid);
    const double peak = lin.empty() ? 1.0 : *std::max_element(lin.begin(), lin.end());
    for (double v : lin) {
        out.y.push_back(10.0 * std::log10(std::max(v / peak, 1e-300)));
    }
    return out;
}

double bce_bits(const LlrBlock& llrs, const BitBlock& bits)
{
    if (llrs.rows != bits.rows || llrs.bits_per_symbol != bits.bits_per_symbol) {
        throw DimensionError("LLR block and bit block shapes differ");
    }
    if (bits.rows == 0) {
        return 0.0;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < llrs.values.size(); ++i) {
        const double l = std::clamp(llrs.values[i], -kLlrCap, kLlrCap);
        // -ln Q(b | r) with Q(1) = sigmoid(l): softplus(l) - b l
        const double softplus = std::max(l, 0.0) + std::log1p(std::exp(-std::abs(l)));
        acc += softplus - (bits.bits[i] ? l : 0.0);
    }
    return acc / (static_cast<double>(bits.rows) * std::numbers::ln2);
}

double bmd_rate_estimate(const LlrBlock& llrs, const BitBlock& bits)
{
    return bits.bits_per_symbol - bce_bits(llrs, bits);
}

}  // namespace wavelearn
