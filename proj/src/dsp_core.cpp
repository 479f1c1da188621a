#include "wavelearn/dsp_core.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/sin_pi.hpp>
#include <boost/math/special_functions/cos_pi.hpp>

#include "wavelearn/errors.hpp"
#include "wavelearn/quadrature.hpp"

namespace wavelearn {

namespace {

constexpr double kPi = std::numbers::pi;

// e^{j 2 pi x} evaluated with exact reduction of the argument.
cplx unit_phasor(double x)
{
    return {boost::math::cos_pi(2.0 * x), boost::math::sin_pi(2.0 * x)};
}

}  // namespace

double sinc(double x)
{
    if (x == 0.0) {
        return 1.0;
    }
    return boost::math::sin_pi(x) / (kPi * x);
}

void FilterParams::validate() const
{
    if (!(duration > 0.0) || !(symbol_period > 0.0)) {
        throw ConfigError("filter duration and symbol period must be positive");
    }
    if (coeffs.size() % 2 != 1) {
        std::ostringstream msg;
        msg << "filter coefficient count must be odd (2S+1), got " << coeffs.size();
        throw ConfigError(msg.str());
    }
}

FilterParams FilterParams::single_harmonic(int half_width, int s, double duration, double symbol_period,
                                           bool normalized, cplx value)
{
    FilterParams p;
    p.coeffs = CVec::Zero(2 * half_width + 1);
    p.coeffs(s + half_width) = value;
    p.duration = duration;
    p.symbol_period = symbol_period;
    p.normalized = normalized;
    return p;
}

double normalization_constant(const FilterParams& params)
{
    const double energy = params.coeffs.squaredNorm();
    if (!(energy > 0.0)) {
        throw DegenerateFilterError("normalization constant undefined for all-zero filter coefficients");
    }
    return params.duration / energy;
}

double time_scale(const FilterParams& params)
{
    const double base = 1.0 / params.duration;
    return params.normalized ? std::sqrt(normalization_constant(params)) * base : base;
}

cplx eval_filter_time(const FilterParams& params, double t)
{
    const double d = params.duration;
    if (!(std::abs(t) < 0.5 * d)) {
        return 0.0;
    }
    const int half = params.half_width();
    cplx acc = 0.0;
    for (int s = -half; s <= half; ++s) {
        acc += params.coeff(s) * unit_phasor(s * t / d);
    }
    return time_scale(params) * acc;
}

cplx eval_filter_freq(const FilterParams& params, double f)
{
    const int half = params.half_width();
    const double df = params.duration * f;
    cplx acc = 0.0;
    for (int s = -half; s <= half; ++s) {
        acc += params.coeff(s) * sinc(df - s);
    }
    if (params.normalized) {
        acc *= std::sqrt(normalization_constant(params));
    }
    return acc;
}

FilterParams matched_receive_filter(const FilterParams& tx)
{
    FilterParams rx = tx;
    rx.normalized = false;
    const double gain = tx.normalized ? std::sqrt(normalization_constant(tx)) : 1.0;
    rx.coeffs = gain * tx.coeffs.conjugate();
    return rx;
}

void RrcParams::validate() const
{
    if (!(rolloff_beta >= 0.0 && rolloff_beta <= 1.0)) {
        throw ConfigError("roll-off factor must lie in [0, 1]");
    }
    if (!(symbol_period > 0.0) || !(duration > 0.0)) {
        throw ConfigError("RRC symbol period and duration must be positive");
    }
    const double ratio = duration / symbol_period;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
        throw ConfigError("RRC duration must be an integer multiple of the symbol period");
    }
}

double rrc_pulse(const RrcParams& params, double t)
{
    const double T = params.symbol_period;
    const double beta = params.rolloff_beta;
    const double x = t / T;
    const double norm = 1.0 / std::sqrt(T);
    constexpr double kSnap = 1e-8;

    if (std::abs(x) < kSnap) {
        return norm * (1.0 - beta + 4.0 * beta / kPi);
    }
    if (beta > 0.0 && std::abs(std::abs(x) - 0.25 / beta) < kSnap) {
        const double a = kPi / (4.0 * beta);
        return norm * beta / std::sqrt(2.0) *
               ((1.0 + 2.0 / kPi) * std::sin(a) + (1.0 - 2.0 / kPi) * std::cos(a));
    }
    const double num = boost::math::sin_pi(x * (1.0 - beta)) + 4.0 * beta * x * boost::math::cos_pi(x * (1.0 + beta));
    const double q = 4.0 * beta * x;
    const double den = kPi * x * (1.0 - q * q);
    return norm * num / den;
}

double blackman_window(double u)
{
    if (!(std::abs(u) < 0.5)) {
        return 0.0;
    }
    return 0.42 + 0.5 * boost::math::cos_pi(2.0 * u) + 0.08 * boost::math::cos_pi(4.0 * u);
}

WindowedRrc::WindowedRrc(RrcParams params, bool windowed)
    : params_(params), windowed_(windowed)
{
    params_.validate();
    const double half = 0.5 * params_.duration;
    const int panels = static_cast<int>(std::lround(params_.duration / params_.symbol_period));
    const double energy = quad::adaptive([this](double t) {
        const double v = raw(t);
        return v * v;
    }, -half, half, 1e-9 * 1e-3, panels);
    scale_ = 1.0 / std::sqrt(energy);
}

double WindowedRrc::raw(double t) const
{
    const double half = 0.5 * params_.duration;
    if (!(std::abs(t) < half)) {
        return 0.0;
    }
    const double window = windowed_ ? blackman_window(t / params_.duration) : 1.0;
    return rrc_pulse(params_, t) * window;
}

double WindowedRrc::operator()(double t) const
{
    return scale_ * raw(t);
}

std::vector<double> WindowedRrc::grid_times() const
{
    const double step = params_.symbol_period / kSamplesPerSymbol;
    const auto count = static_cast<std::size_t>(std::lround(params_.duration / step)) + 1;
    std::vector<double> times(count);
    for (std::size_t i = 0; i < count; ++i) {
        times[i] = -0.5 * params_.duration + static_cast<double>(i) * step;
    }
    return times;
}

std::vector<double> WindowedRrc::grid_values() const
{
    auto times = grid_times();
    for (double& t : times) {
        t = (*this)(t);
    }
    return times;
}

FilterParams WindowedRrc::project(int half_width) const
{
    // 20-point Gauss-Legendre on panels of T/8. Pulse samples are shared
    // across harmonics.
    const double d = params_.duration;
    const double T = params_.symbol_period;
    const int panels = static_cast<int>(std::lround(8.0 * d / T));
    const double h = d / panels;
    const auto& nodes = boost::math::quadrature::gauss<double, 20>::abscissa();
    const auto& weights = boost::math::quadrature::gauss<double, 20>::weights();

    std::vector<double> ts;
    std::vector<double> ws;
    for (int p = 0; p < panels; ++p) {
        const double mid = -0.5 * d + (p + 0.5) * h;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            for (int sign : {-1, 1}) {
                if (nodes[k] == 0.0 && sign < 0) {
                    continue;
                }
                const double t = mid + sign * nodes[k] * 0.5 * h;
                ts.push_back(t);
                ws.push_back(weights[k] * 0.5 * h * (*this)(t));
            }
        }
    }

    FilterParams out;
    out.coeffs = CVec::Zero(2 * half_width + 1);
    out.duration = d;
    out.symbol_period = T;
    out.normalized = true;
    for (int s = 0; s <= half_width; ++s) {
        double acc = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            acc += ws[i] * boost::math::cos_pi(2.0 * s * ts[i] / d);
        }
        out.coeffs(half_width + s) = acc;
        out.coeffs(half_width - s) = acc;
    }
    return out;
}

double WindowedRrc::self_convolution(double t) const
{
    const double half = 0.5 * params_.duration;
    const double lo = std::max(-half, t - half);
    const double hi = std::min(half, t + half);
    if (!(hi > lo)) {
        return 0.0;
    }
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / params_.symbol_period)));
    return quad::adaptive([this, t](double z) { return (*this)(z) * (*this)(t - z); }, lo, hi, 1e-12, panels);
}

WindowedRrc windowed_rrc(const RrcParams& params)
{
    return WindowedRrc(params, true);
}

}  // namespace wavelearn
