#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "wavelearn/dsp_core.hpp"
#include "wavelearn/modem.hpp"
#include "wavelearn/rng.hpp"

namespace wavelearn {

// Average power of an N-symbol burst with unit-energy pulses of duration D.
double average_power(std::size_t block_length, double symbol_period, double duration);

// Random evaluation points for the instantaneous signal power away from the
// block edges: each draw is a time offset t ~ U(-T/2, T/2) around a virtual
// center symbol plus the i.i.d. symbol indices n = -reach .. reach that can
// overlap it (reach = ceil(D / T)).
struct PowerSamples {
    double duration = 1.0;
    double symbol_period = 1.0;
    int reach = 1;
    std::vector<double> times;
    std::vector<std::uint32_t> symbols;  // count x span, row-major

    std::size_t count() const { return times.size(); }
    std::size_t span() const { return static_cast<std::size_t>(2 * reach + 1); }

    static PowerSamples draw(double duration, double symbol_period, std::size_t constellation_size,
                             std::size_t count, Rng& rng);
};

// |x(t)|^2 for every draw (not normalized by the average power).
std::vector<double> instant_powers(const FilterParams& tx, const Constellation& c, const PowerSamples& samples);

// One draw of |x(t)|^2.
double sample_instant_power(const FilterParams& tx, const Constellation& c, Rng& rng);

// mean(max(p / p_avg - eps_P, 0)) over precomputed normalized powers.
double papr_excess(const std::vector<double>& normalized_powers, double eps_p);

// Monte Carlo estimate of V with `count` draws; eps_P linear.
double papr_excess_V(const FilterParams& tx, const Constellation& c, double eps_p, std::size_t count,
                     std::size_t block_length, Rng& rng);

struct CurveSeries {
    enum class Kind { psd, ccdf, rate };

    Kind kind = Kind::psd;
    std::vector<double> x;
    std::vector<double> y;
};

// Empirical Pr(p(t) / p_avg > threshold) for increasing thresholds in dB.
CurveSeries power_ccdf(const FilterParams& tx, const Constellation& c, const std::vector<double>& thresholds_db,
                       std::size_t num_samples, std::size_t block_length, Rng& rng);

// |G(f)|^2 in dB relative to its peak over the grid.
CurveSeries analytic_psd(const FilterParams& tx, const std::vector<double>& f_grid);

// |G(f)|^2 on the grid, linear and unnormalized.
std::vector<double> psd_linear(const FilterParams& tx, const std::vector<double>& f_grid);

// Largest |LLR| used when mapping LLRs to bit probabilities.
inline constexpr double kLlrCap = 30.0;

// Mean binary cross-entropy in bits per symbol, sum over the K bit positions.
double bce_bits(const LlrBlock& llrs, const BitBlock& bits);

// K - bce_bits: the bit-metric decoding rate estimate.
double bmd_rate_estimate(const LlrBlock& llrs, const BitBlock& bits);

}  // namespace wavelearn
