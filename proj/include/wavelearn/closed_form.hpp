#pragma once

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wavelearn/dsp_core.hpp"

namespace wavelearn {

// A(t): (g_tx * g_rx^*)(t) = sqrt(C)/D * psi^H A(t) theta for |t| <= D.
// Row index s1 + S pairs with psi, column index s2 + S with theta.
struct ConvMatrix {
    double t = 0.0;
    Eigen::MatrixXcd entries;
};

// A'(t): E[w_m w^*_{m+l}] = N0/D * psi^H A'(l T) psi.
struct NoiseCorrMatrix {
    double t = 0.0;
    Eigen::MatrixXcd entries;
};

// E_{s1,s2} = integral over (-W/2, W/2) of sinc(Df - s1) sinc(Df - s2) df.
struct InbandMatrix {
    double bandwidth = 1.0;
    double duration = 1.0;
    Eigen::MatrixXd entries;

    int half_width() const { return static_cast<int>((entries.rows() - 1) / 2); }
};

struct MultipathCIR {
    std::vector<cplx> gains;
    std::vector<double> delays;

    // Single unit path at zero delay.
    static MultipathCIR awgn();
    void validate() const;
    std::size_t num_paths() const { return gains.size(); }
};

// Nonzero discrete-time taps h_l for l in [first_index, first_index + taps.size()).
struct ChannelRealization {
    std::vector<cplx> taps;
    int first_index = 0;

    int last_index() const { return first_index + static_cast<int>(taps.size()) - 1; }
    cplx tap(int ell) const;
};

ConvMatrix conv_matrix(double t, double duration, int half_width);
NoiseCorrMatrix noise_corr_matrix(double t, double duration, int half_width);

// Transmit and receive filters must share D and S.
cplx filter_cross_correlation(const FilterParams& tx, const FilterParams& rx, double t);
cplx noise_covariance(const FilterParams& rx, double n0, double symbol_period, int ell);

InbandMatrix inband_matrix(double bandwidth, double duration, int half_width);

// In-band energy C(theta) theta^H E theta of a transmit filter.
double inband_energy(const FilterParams& tx, const InbandMatrix& e);
double aclr(const FilterParams& tx, const InbandMatrix& e);

// Inclusive tap index range [lo, hi] with min_p |l T - tau_p| <= D.
std::pair<int, int> tap_range(const MultipathCIR& cir, double duration, double symbol_period);

ChannelRealization channel_taps(const FilterParams& tx, const FilterParams& rx, const MultipathCIR& cir,
                                double symbol_period);

// Sum_p a_p A(l T - tau_p) for every l in tap_range; the taps are then
// sqrt(C)/D psi^H B_l theta. Used by the differentiable link.
struct TapMatrices {
    int first_index = 0;
    std::vector<Eigen::MatrixXcd> matrices;
};

TapMatrices tap_matrices(const MultipathCIR& cir, double duration, int half_width, double symbol_period);
// Same over an explicit range [lo, hi]; taps outside the support are zero.
TapMatrices tap_matrices(const MultipathCIR& cir, double duration, int half_width, double symbol_period, int lo,
                         int hi);

}  // namespace wavelearn
