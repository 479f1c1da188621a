#include "wavelearn/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace wavelearn::oracle {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTol = 1e-10;

double plain_sinc(double x)
{
    return x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
}

template <typename F>
double integrate(F f, double a, double b, int panels)
{
    if (!(b > a)) {
        return 0.0;
    }
    double acc = 0.0;
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        acc += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a + p * h, a + (p + 1) * h, 10, kTol);
    }
    return acc;
}

template <typename F>
cplx integrate_complex(F f, double a, double b, int panels)
{
    const double re = integrate([&](double x) { return f(x).real(); }, a, b, panels);
    const double im = integrate([&](double x) { return f(x).imag(); }, a, b, panels);
    return {re, im};
}

int oscillation_panels(int half_width)
{
    return 4 * half_width + 4;
}

}  // namespace

cplx pulse(const CVec& coeffs, double duration, bool normalized, double t)
{
    if (std::abs(t) >= duration / 2) {
        return 0.0;
    }
    const int half = static_cast<int>(coeffs.size() - 1) / 2;
    double energy = 0.0;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
        energy += std::norm(coeffs(i));
    }
    const double amp = normalized ? std::sqrt(duration / energy) / duration : 1.0 / duration;
    cplx acc = 0.0;
    for (int s = -half; s <= half; ++s) {
        acc += coeffs(s + half) * std::polar(1.0, 2.0 * kPi * s * t / duration);
    }
    return amp * acc;
}

cplx conv_entry(int s1, int s2, double t, double duration)
{
    const double x = t / duration;
    const double lo = std::max(-0.5, x - 0.5);
    const double hi = std::min(0.5, x + 0.5);
    const int panels = std::max(4, 2 * (std::abs(s1) + std::abs(s2)) + 2);
    return integrate_complex([&](double l) { return std::polar(1.0, 2.0 * kPi * (s2 * x - (s1 + s2) * l)); }, lo, hi,
                             panels);
}

cplx noise_corr_entry(int s1, int s2, double t, double duration)
{
    const double x = t / duration;
    const double lo = std::max(-0.5, -x - 0.5);
    const double hi = std::min(0.5, -x + 0.5);
    const int panels = std::max(4, 2 * (std::abs(s1) + std::abs(s2)) + 2);
    return integrate_complex(
        [&](double l) { return std::polar(1.0, -2.0 * kPi * s1 * l) * std::polar(1.0, 2.0 * kPi * s2 * (l + x)); },
        lo, hi, panels);
}

double inband_entry(int s1, int s2, double bandwidth, double duration)
{
    const double half = 0.5 * bandwidth * duration;
    const int panels = std::max(2, static_cast<int>(std::ceil(4.0 * half)));
    return integrate([&](double u) { return plain_sinc(u - s1) * plain_sinc(u - s2); }, -half, half, panels) /
           duration;
}

cplx cross_correlation(const FilterParams& tx, const FilterParams& rx, double t)
{
    const double d = tx.duration;
    const double lo = std::max(-d / 2, t - d / 2);
    const double hi = std::min(d / 2, t + d / 2);
    const int panels = oscillation_panels(std::max(tx.half_width(), rx.half_width()));
    return integrate_complex(
        [&](double tau) {
            return std::conj(pulse(rx.coeffs, d, rx.normalized, tau)) * pulse(tx.coeffs, d, tx.normalized, t - tau);
        },
        lo, hi, panels);
}

cplx noise_covariance(const FilterParams& rx, double n0, double symbol_period, int ell)
{
    const double d = rx.duration;
    const double t = ell * symbol_period;
    const double lo = std::max(-d / 2, -d / 2 - t);
    const double hi = std::min(d / 2, d / 2 - t);
    const int panels = oscillation_panels(rx.half_width());
    return n0 * integrate_complex(
                    [&](double tau) {
                        return std::conj(pulse(rx.coeffs, d, rx.normalized, tau)) *
                               pulse(rx.coeffs, d, rx.normalized, tau + t);
                    },
                    lo, hi, panels);
}

double aclr(const FilterParams& tx, double bandwidth)
{
    const double d = tx.duration;
    const int half = tx.half_width();
    double energy = 0.0;
    for (Eigen::Index i = 0; i < tx.coeffs.size(); ++i) {
        energy += std::norm(tx.coeffs(i));
    }
    const double amp = std::sqrt(d / energy) / d;
    auto spectrum = [&](double f) {
        cplx acc = 0.0;
        for (int s = -half; s <= half; ++s) {
            acc += tx.coeffs(s + half) * d * plain_sinc(d * f - s);
        }
        return std::norm(amp * acc);
    };
    const int panels = std::max(2, static_cast<int>(std::ceil(4.0 * bandwidth * d)));
    const double inband = integrate(spectrum, -bandwidth / 2, bandwidth / 2, panels);
    const double total = integrate([&](double t) { return std::norm(pulse(tx.coeffs, d, true, t)); }, -d / 2, d / 2,
                                   oscillation_panels(half));
    return total / inband - 1.0;
}

std::vector<cplx> channel_taps(const FilterParams& tx, const FilterParams& rx, const MultipathCIR& cir,
                               double symbol_period, int lo, int hi, int per_symbol)
{
    const double d = tx.duration;
    std::vector<cplx> out;
    for (int ell = lo; ell <= hi; ++ell) {
        cplx h = 0.0;
        for (std::size_t p = 0; p < cir.gains.size(); ++p) {
            const double t = ell * symbol_period - cir.delays[p];
            const double a = std::max(-d / 2, t - d / 2);
            const double b = std::min(d / 2, t + d / 2);
            if (!(b > a)) {
                continue;
            }
            int n = std::max(2, static_cast<int>(std::ceil(per_symbol * (b - a) / symbol_period)));
            n += n % 2;
            const double step = (b - a) / n;
            cplx acc = 0.0;
            for (int i = 0; i <= n; ++i) {
                const double tau = a + i * step;
                const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
                // Endpoints sit on the support edge; use the interior limit.
                const double tin = std::clamp(tau, -d / 2 + 1e-15 * d, d / 2 - 1e-15 * d);
                const double tt = std::clamp(t - tau, -d / 2 + 1e-15 * d, d / 2 - 1e-15 * d);
                acc += w * std::conj(pulse(rx.coeffs, d, rx.normalized, tin)) * pulse(tx.coeffs, d, tx.normalized, tt);
            }
            h += cir.gains[p] * acc * step / 3.0;
        }
        out.push_back(h);
    }
    return out;
}

}  // namespace wavelearn::oracle
