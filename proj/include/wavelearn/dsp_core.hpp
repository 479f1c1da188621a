#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace wavelearn {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;

// sin(pi x) / (pi x) with sinc(0) = 1.
double sinc(double x);

// Trainable filter described by a truncated Fourier series of period D,
// time-limited to (-D/2, D/2). Equivalently a weighted sum of the frequency
// basis functions sinc(D f - s), s in [-S, S].
//
// coeffs(i) holds the coefficient of harmonic s = i - S. When `normalized`
// is set the filter carries the sqrt(C) factor that gives it unit energy
// (transmit side); otherwise the raw 1/D scaling applies (receive side).
struct FilterParams {
    CVec coeffs;
    double duration = 1.0;
    double symbol_period = 1.0;
    bool normalized = false;

    int half_width() const { return static_cast<int>((coeffs.size() - 1) / 2); }
    cplx coeff(int s) const { return coeffs(s + half_width()); }

    // Throws ConfigError on non-positive durations or an even coefficient count.
    void validate() const;

    // Filter with a single nonzero coefficient at harmonic `s`.
    static FilterParams single_harmonic(int half_width, int s, double duration, double symbol_period,
                                        bool normalized, cplx value = 1.0);
};

// C(theta) = D / (theta^H theta). Throws DegenerateFilterError on all-zero coefficients.
double normalization_constant(const FilterParams& params);

// Amplitude factor in front of the Fourier series: sqrt(C)/D or 1/D.
double time_scale(const FilterParams& params);

cplx eval_filter_time(const FilterParams& params, double t);
cplx eval_filter_freq(const FilterParams& params, double f);

// Receive filter matched to `tx`: g_rx(t) = conj(g_tx(-t)) including the energy
// normalization, expressed as unnormalized receive coefficients.
FilterParams matched_receive_filter(const FilterParams& tx);

struct RrcParams {
    double rolloff_beta = 0.25;
    double symbol_period = 1.0;
    double duration = 32.0;

    // 0 <= beta <= 1 (beta = 1 is accepted), T > 0, D a positive multiple of T.
    void validate() const;
};

// Unit-energy root-raised-cosine impulse response; the removable
// singularities at t = 0 and |t| = T/(4 beta) are evaluated by their limits.
double rrc_pulse(const RrcParams& params, double t);

// Blackman taper (0.42, 0.5, 0.08) on u in (-1/2, 1/2), zero elsewhere.
double blackman_window(double u);

// Baseline pulse g(t) = rrc(t) * bm(t / D), numerically renormalized to unit
// energy. Available as a time-evaluable function, as a dense grid with
// kSamplesPerSymbol samples per T, and as a projection onto the sinc basis.
class WindowedRrc {
public:
    static constexpr int kSamplesPerSymbol = 64;

    // `windowed == false` truncates the raw RRC to (-D/2, D/2) instead, which
    // approximates the unwindowed pulse for large D.
    explicit WindowedRrc(RrcParams params, bool windowed = true);

    const RrcParams& params() const { return params_; }
    bool windowed() const { return windowed_; }

    // Unit-energy pulse value.
    double operator()(double t) const;

    // Factor applied to rrc * bm to reach unit energy.
    double energy_scale() const { return scale_; }

    std::vector<double> grid_times() const;
    std::vector<double> grid_values() const;

    // Fourier-series coefficients c_s = G(s / D) for |s| <= half_width, as a
    // normalized transmit filter. The truncation error shrinks with S.
    FilterParams project(int half_width) const;

    // (g * g)(t) by adaptive quadrature (the pulse is real and even).
    double self_convolution(double t) const;

private:
    double raw(double t) const;

    RrcParams params_;
    bool windowed_ = true;
    double scale_ = 1.0;
};

WindowedRrc windowed_rrc(const RrcParams& params);

}  // namespace wavelearn
