#include "wavelearn/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/cos_pi.hpp>
#include <boost/math/special_functions/sin_pi.hpp>

#include "wavelearn/errors.hpp"

namespace wavelearn {

namespace {

constexpr double kPi = std::numbers::pi;

// e^{j pi x}
cplx half_phasor(double x)
{
    return {boost::math::cos_pi(x), boost::math::sin_pi(x)};
}

// sin(pi n delta) / (pi n), n != 0
double dirichlet_term(int n, double delta)
{
    return boost::math::sin_pi(n * delta) / (kPi * n);
}

void require_shared_geometry(const FilterParams& tx, const FilterParams& rx)
{
    if (tx.duration != rx.duration || tx.coeffs.size() != rx.coeffs.size()) {
        throw DimensionError("transmit and receive filters must share duration D and half-width S");
    }
}

}  // namespace

MultipathCIR MultipathCIR::awgn()
{
    return MultipathCIR{{cplx(1.0, 0.0)}, {0.0}};
}

void MultipathCIR::validate() const
{
    if (gains.empty() || gains.size() != delays.size()) {
        throw ConfigError("multipath CIR needs P >= 1 paths with one delay per gain");
    }
    for (double tau : delays) {
        if (!std::isfinite(tau) || tau < 0.0) {
            throw ConfigError("multipath delays must be finite and non-negative");
        }
    }
}

cplx ChannelRealization::tap(int ell) const
{
    if (ell < first_index || ell > last_index()) {
        return 0.0;
    }
    return taps[static_cast<std::size_t>(ell - first_index)];
}

ConvMatrix conv_matrix(double t, double duration, int half_width)
{
    const double x = t / duration;
    const double l_max = std::min(0.5, x + 0.5);
    const double l_min = std::max(-0.5, x - 0.5);
    const double delta = std::max(l_max - l_min, 0.0);
    const double sum = l_max + l_min;

    const int n = 2 * half_width + 1;
    ConvMatrix out{t, Eigen::MatrixXcd::Zero(n, n)};
    if (delta == 0.0) {
        return out;
    }
    for (int s1 = -half_width; s1 <= half_width; ++s1) {
        for (int s2 = -half_width; s2 <= half_width; ++s2) {
            const int k = s1 + s2;
            cplx v;
            if (k == 0) {
                v = half_phasor(2.0 * s2 * x) * delta;
            } else {
                v = half_phasor(2.0 * s2 * x - k * sum) * dirichlet_term(k, delta);
            }
            out.entries(s1 + half_width, s2 + half_width) = v;
        }
    }
    return out;
}

NoiseCorrMatrix noise_corr_matrix(double t, double duration, int half_width)
{
    const double x = t / duration;
    const double l_max = std::min(0.5, -x + 0.5);
    const double l_min = std::max(-0.5, -x - 0.5);
    const double delta = std::max(l_max - l_min, 0.0);
    const double sum = l_max + l_min;

    const int n = 2 * half_width + 1;
    NoiseCorrMatrix out{t, Eigen::MatrixXcd::Zero(n, n)};
    if (delta == 0.0) {
        return out;
    }
    for (int s1 = -half_width; s1 <= half_width; ++s1) {
        for (int s2 = -half_width; s2 <= half_width; ++s2) {
            const int k = s2 - s1;
            cplx v;
            if (k == 0) {
                v = half_phasor(2.0 * s1 * x) * delta;
            } else {
                // Phase follows the psi_{s2} harmonic; see the quadrature oracle test.
                v = half_phasor(2.0 * s2 * x + k * sum) * dirichlet_term(k, delta);
            }
            out.entries(s1 + half_width, s2 + half_width) = v;
        }
    }
    return out;
}

cplx filter_cross_correlation(const FilterParams& tx, const FilterParams& rx, double t)
{
    require_shared_geometry(tx, rx);
    const double d = tx.duration;
    if (std::abs(t) > d) {
        return 0.0;
    }
    const auto a = conv_matrix(t, d, tx.half_width());
    const cplx form = rx.coeffs.dot(a.entries * tx.coeffs);  // dot() conjugates its left operand
    return time_scale(tx) * form;
}

cplx noise_covariance(const FilterParams& rx, double n0, double symbol_period, int ell)
{
    const double d = rx.duration;
    const double t = ell * symbol_period;
    if (std::abs(t) > d || n0 == 0.0) {
        return 0.0;
    }
    const auto a = noise_corr_matrix(t, d, rx.half_width());
    cplx form = rx.coeffs.dot(a.entries * rx.coeffs);
    if (ell == 0) {
        form = form.real();
    }
    return n0 / d * form;
}

InbandMatrix inband_matrix(double bandwidth, double duration, int half_width)
{
    if (!(bandwidth > 0.0) || !(duration > 0.0)) {
        throw ConfigError("in-band matrix needs positive bandwidth and duration");
    }
    // Substituting u = D f: E = (1/D) int_{-DW/2}^{DW/2} sinc(u - s1) sinc(u - s2) du,
    // integrated with 20-point Gauss-Legendre on panels of width <= 1/2.
    const double half = 0.5 * duration * bandwidth;
    const int panels = std::max(1, static_cast<int>(std::ceil(4.0 * half)));
    const double h = 2.0 * half / panels;
    const auto& nodes = boost::math::quadrature::gauss<double, 20>::abscissa();
    const auto& weights = boost::math::quadrature::gauss<double, 20>::weights();

    std::vector<double> us;
    std::vector<double> ws;
    for (int p = 0; p < panels; ++p) {
        const double mid = -half + (p + 0.5) * h;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            us.push_back(mid + nodes[k] * 0.5 * h);
            ws.push_back(weights[k] * 0.5 * h);
            us.push_back(mid - nodes[k] * 0.5 * h);
            ws.push_back(weights[k] * 0.5 * h);
        }
    }

    const int n = 2 * half_width + 1;
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(us.size()), n);
    for (std::size_t i = 0; i < us.size(); ++i) {
        const double root_w = std::sqrt(ws[i]);
        for (int s = -half_width; s <= half_width; ++s) {
            basis(static_cast<Eigen::Index>(i), s + half_width) = root_w * sinc(us[i] - s);
        }
    }
    InbandMatrix out;
    out.bandwidth = bandwidth;
    out.duration = duration;
    out.entries = (basis.transpose() * basis) / duration;
    out.entries = 0.5 * (out.entries + out.entries.transpose()).eval();
    return out;
}

double inband_energy(const FilterParams& tx, const InbandMatrix& e)
{
    if (e.entries.rows() != tx.coeffs.size() || e.duration != tx.duration) {
        throw DimensionError("in-band matrix was built for a different filter geometry");
    }
    const double c = normalization_constant(tx);
    const Eigen::VectorXd re = tx.coeffs.real();
    const Eigen::VectorXd im = tx.coeffs.imag();
    // theta^H E theta for real symmetric E.
    const double form = re.dot(e.entries * re) + im.dot(e.entries * im);
    return c * form;
}

double aclr(const FilterParams& tx, const InbandMatrix& e)
{
    return 1.0 / inband_energy(tx, e) - 1.0;
}

std::pair<int, int> tap_range(const MultipathCIR& cir, double duration, double symbol_period)
{
    cir.validate();
    int lo = 0;
    int hi = 0;
    bool first = true;
    for (double tau : cir.delays) {
        const int a = static_cast<int>(std::ceil((tau - duration) / symbol_period - 1e-12));
        const int b = static_cast<int>(std::floor((tau + duration) / symbol_period + 1e-12));
        lo = first ? a : std::min(lo, a);
        hi = first ? b : std::max(hi, b);
        first = false;
    }
    return {lo, hi};
}

ChannelRealization channel_taps(const FilterParams& tx, const FilterParams& rx, const MultipathCIR& cir,
                                double symbol_period)
{
    require_shared_geometry(tx, rx);
    const auto [lo, hi] = tap_range(cir, tx.duration, symbol_period);
    ChannelRealization out;
    out.first_index = lo;
    out.taps.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (int ell = lo; ell <= hi; ++ell) {
        cplx h = 0.0;
        for (std::size_t p = 0; p < cir.num_paths(); ++p) {
            h += cir.gains[p] * filter_cross_correlation(tx, rx, ell * symbol_period - cir.delays[p]);
        }
        out.taps[static_cast<std::size_t>(ell - lo)] = h;
    }
    return out;
}

TapMatrices tap_matrices(const MultipathCIR& cir, double duration, int half_width, double symbol_period)
{
    const auto [lo, hi] = tap_range(cir, duration, symbol_period);
    return tap_matrices(cir, duration, half_width, symbol_period, lo, hi);
}

TapMatrices tap_matrices(const MultipathCIR& cir, double duration, int half_width, double symbol_period, int lo,
                         int hi)
{
    TapMatrices out;
    out.first_index = lo;
    const int n = 2 * half_width + 1;
    for (int ell = lo; ell <= hi; ++ell) {
        Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(n, n);
        for (std::size_t p = 0; p < cir.num_paths(); ++p) {
            const double t = ell * symbol_period - cir.delays[p];
            if (std::abs(t) <= duration) {
                b += cir.gains[p] * conv_matrix(t, duration, half_width).entries;
            }
        }
        out.matrices.push_back(std::move(b));
    }
    return out;
}

}  // namespace wavelearn
