#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wavelearn/closed_form.hpp"
#include "wavelearn/dsp_core.hpp"
#include "wavelearn/modem.hpp"
#include "wavelearn/rng.hpp"

namespace wavelearn {

struct LinkConfig {
    std::size_t block_length = 1000;
    int bits_per_symbol = 4;
    double symbol_period = 1.0;
    double n0 = 0.1;  // SNR = 1 / N0
    std::uint64_t seed = 0;

    void validate() const;
};

double n0_from_snr_db(double snr_db);

// Synthetic tapped-delay-line channel: uniform delays, exponential power
// delay profile.
struct TdlConfig {
    int num_paths = 6;
    double max_delay = 4.0;
    double decay_constant = 4.0 / 3.0;
    bool normalize = true;

    void validate() const;
};

// r_m = sum_l s_{m-l} h_l, zero outside the block.
std::vector<cplx> apply_channel(std::span<const cplx> s, const ChannelRealization& h);

// Lower banded Cholesky factor of the stationary noise covariance
// K_{m, m+l} = noise_covariance(l) for a block of n samples.
class BandedNoiseFactor {
public:
    BandedNoiseFactor(const FilterParams& rx, double n0, double symbol_period, std::size_t n);

    std::size_t size() const { return n_; }
    int bandwidth() const { return band_; }
    bool jittered() const { return jittered_; }

    // factor * (i.i.d. CN(0, 1))
    std::vector<cplx> sample(Rng& rng) const;

private:
    std::size_t n_ = 0;
    int band_ = 0;
    bool jittered_ = false;
    bool zero_ = false;
    std::vector<cplx> ab_;  // LAPACK lower band storage, (band + 1) x n column-major
};

std::vector<cplx> sample_correlated_noise(const FilterParams& rx, double n0, double symbol_period, std::size_t n,
                                          Rng& rng);

MultipathCIR synth_tdl_cir(const TdlConfig& cfg, Rng& rng);

// Noiseless received samples for one user.
std::vector<cplx> transmit(const BitBlock& bits, const FilterParams& tx, const FilterParams& rx,
                           const Constellation& c, const MultipathCIR& cir, double symbol_period);

std::vector<cplx> simulate_link(const BitBlock& bits, const FilterParams& tx, const FilterParams& rx,
                                const Constellation& c, const MultipathCIR& cir, const LinkConfig& cfg, Rng& rng);

std::vector<cplx> simulate_two_user(const BitBlock& bits1, const BitBlock& bits2, const FilterParams& tx1,
                                    const FilterParams& tx2, const FilterParams& rx, const Constellation& c1,
                                    const Constellation& c2, const LinkConfig& cfg, Rng& rng);

// BMD rate of a fixed link with the exact AWGN demapper applied to
// r / h_0 (residual ISI ignored), averaged over `num_blocks` blocks.
double baseline_rate(const FilterParams& tx, const FilterParams& rx, const Constellation& c, double snr_db,
                     std::size_t block_length, std::size_t num_blocks, std::uint64_t seed, int threads = 1);

// CSV rows `realization_id,p,re(a),im(a),tau`.
void write_cir_csv(const std::string& path, const std::vector<MultipathCIR>& cirs, const std::string& provenance);
std::vector<MultipathCIR> read_cir_csv(const std::string& path);

// Exact-in-distribution noise synthesis that stays linear in the receive
// coefficients, for use inside a differentiable graph. The noise integral
// is split into segments of length T; each segment contributes a Gaussian
// vector over the 2S+1 harmonics whose covariance is known in closed form.
// The receiver output is then w = Y conj(psi) / D. Requires D / T integer.
class NoiseProjector {
public:
    NoiseProjector(double duration, double symbol_period, int half_width);

    // Y for `n` consecutive outputs, rows = samples, cols = harmonics.
    Eigen::MatrixXcd sample(std::size_t n, double n0, Rng& rng) const;

    int segments_per_window() const { return segments_; }

private:
    double duration_;
    double symbol_period_;
    int half_width_;
    int segments_;
    int first_segment_;
    Eigen::MatrixXcd factor_;    // harmonics x rank, factor factor^H = T * G0
    Eigen::MatrixXcd phases_;    // segments x harmonics
};

}  // namespace wavelearn
