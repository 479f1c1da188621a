#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "wavelearn/closed_form.hpp"
#include "wavelearn/dsp_core.hpp"
#include "wavelearn/modem.hpp"
#include "wavelearn/rng.hpp"

// Brute-force references. Each one evaluates a defining integral or sum
// directly and shares no code with the closed forms it is compared to.
namespace wavelearn::oracle {

// g(t) from its coefficients, with C recomputed here.
cplx pulse(const CVec& coeffs, double duration, bool normalized, double t);

// Element (s1, s2) of A(t): overlap integral of exp(j 2 pi (s2 x - (s1 + s2) l)) dl, x = t / D.
cplx conv_entry(int s1, int s2, double t, double duration);
// Element (s1, s2) of A'(t): overlap integral of exp(-j 2 pi s1 l) exp(j 2 pi s2 (l + x)) dl.
cplx noise_corr_entry(int s1, int s2, double t, double duration);
// (1/D) integral over (-DW/2, DW/2) of sinc(u - s1) sinc(u - s2) du.
double inband_entry(int s1, int s2, double bandwidth, double duration);

// integral of conj(g_rx(tau)) g_tx(t - tau) d tau.
cplx cross_correlation(const FilterParams& tx, const FilterParams& rx, double t);
// N0 integral of conj(g_rx(tau)) g_rx(tau + l T) d tau.
cplx noise_covariance(const FilterParams& rx, double n0, double symbol_period, int ell);
// Out-of-band over in-band energy from |G(f)|^2 and the time-domain energy.
double aclr(const FilterParams& tx, double bandwidth);

// Taps sum_p a_p (g_tx * conj g_rx)(l T - tau_p) by composite Simpson
// sums over `per_symbol` samples per T on each overlap interval.
std::vector<cplx> channel_taps(const FilterParams& tx, const FilterParams& rx, const MultipathCIR& cir,
                               double symbol_period, int lo, int hi, int per_symbol = 256);

// r_m = sum_l h_l s_{m - l} by direct double loop.
std::vector<cplx> convolve(const std::vector<cplx>& s, const std::vector<cplx>& taps, int first_index);

// log-sum-exp LLRs by enumeration of the constellation.
LlrBlock enumerate_llrs(const std::vector<cplx>& r, const Constellation& c, double noise_var);

// BMD rate (GMI) of a constellation on complex AWGN by 2-D Gauss-Hermite
// quadrature over the noise with exact bitwise LLRs.
double gauss_hermite_gmi(const Constellation& c, double n0, int order = 40);

// Central differences of a scalar function.
std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                      const std::vector<double>& x, double h = 1e-6);

// Plain Adam on a flat vector, (0.9, 0.999, 1e-8).
struct ReferenceAdam {
    std::vector<double> m;
    std::vector<double> v;
    long t = 0;
    void step(std::vector<double>& x, const std::vector<double>& g, double lr);
};

// Welch averaged periodogram (Hann window, 50 % overlap), two-sided and
// fftshifted to bins f_k = (k - nfft/2) fs / nfft.
std::vector<double> welch_psd(const std::vector<cplx>& x, double fs, std::size_t nfft);

// Receiver noise samples from discretized white noise, conj(g_rx) applied
// as a convolution; returns the empirical E[w_m conj(w_{m+l})], l = 0..max_lag.
std::vector<cplx> mc_noise_covariance(const FilterParams& rx, double n0, double symbol_period, int max_lag,
                                      std::size_t trials, Rng& rng, int per_symbol = 64);

// Largest |(g_tx * conj g_rx)(l T)| over l != 0, relative to l = 0.
double nyquist_isi(const FilterParams& tx, const FilterParams& rx, double symbol_period);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace wavelearn::oracle
