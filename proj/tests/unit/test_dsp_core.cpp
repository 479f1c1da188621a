#include "doctest.h"

#include <cmath>
#include <functional>
#include <numbers>

#include "wavelearn/closed_form.hpp"
#include "wavelearn/dsp_core.hpp"
#include "wavelearn/errors.hpp"
#include "wavelearn/oracles.hpp"

using namespace wavelearn;

namespace {

double riemann_energy(const std::function<double(double)>& g, double lo, double hi, int n)
{
    const double h = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = g(lo + (i + 0.5) * h);
        acc += v * v;
    }
    return acc * h;
}

double aclr_db(double beta, double duration, int half_width)
{
    RrcParams p;
    p.rolloff_beta = beta;
    p.duration = duration;
    const FilterParams tx = WindowedRrc(p).project(half_width);
    return 10.0 * std::log10(aclr(tx, inband_matrix(1.0, duration, half_width)));
}

}  // namespace

TEST_CASE("rrc pulse has unit energy")
{
    for (double beta : {0.25, 0.5, 1.0}) {
        RrcParams p;
        p.rolloff_beta = beta;
        const double e = riemann_energy([&](double t) { return rrc_pulse(p, t); }, -200.0, 200.0, 400000);
        CHECK(e == doctest::Approx(1.0).epsilon(beta < 0.5 ? 2e-3 : 1e-4));
    }
}

TEST_CASE("rrc removable singularities are continuous")
{
    RrcParams p;
    p.rolloff_beta = 0.25;
    const double ts = p.symbol_period / (4.0 * p.rolloff_beta);
    CHECK(std::isfinite(rrc_pulse(p, ts)));
    CHECK(rrc_pulse(p, ts) == doctest::Approx(rrc_pulse(p, ts + 1e-7)).epsilon(1e-5));
    CHECK(rrc_pulse(p, 0.0) == doctest::Approx(rrc_pulse(p, 1e-7)).epsilon(1e-6));
}

TEST_CASE("blackman taper")
{
    CHECK(blackman_window(0.0) == doctest::Approx(1.0));
    CHECK(std::abs(blackman_window(0.5)) < 1e-12);
    CHECK(blackman_window(0.7) == 0.0);
    CHECK(blackman_window(0.2) == doctest::Approx(blackman_window(-0.2)));
}

TEST_CASE("windowed rrc is renormalized to unit energy")
{
    RrcParams p;
    p.rolloff_beta = 0.5;
    p.duration = 8.0;
    const WindowedRrc g(p);
    CHECK(riemann_energy([&](double t) { return g(t); }, -4.0, 4.0, 80000) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(g(4.5) == 0.0);
}

TEST_CASE("sinc-basis projection converges to the windowed rrc")
{
    RrcParams p;
    p.rolloff_beta = 0.25;
    p.duration = 8.0;
    const WindowedRrc g(p);
    auto max_err = [&](int s) {
        const FilterParams f = g.project(s);
        double e = 0.0;
        for (double t = -3.9; t <= 3.9; t += 0.05) {
            e = std::max(e, std::abs(eval_filter_time(f, t) - g(t)));
        }
        return e;
    };
    const double coarse = max_err(10);
    const double fine = max_err(40);
    CHECK(fine < coarse);
    CHECK(fine < 1e-3);
}

TEST_CASE("normalized filter has unit energy by quadrature")
{
    FilterParams f;
    f.coeffs = CVec::Zero(7);
    f.coeffs << cplx(0.3, 0.1), cplx(-1.0, 0.4), cplx(0.2, 0.0), cplx(2.0, -1.0), cplx(0.0, 0.5), cplx(0.1, 0.1),
        cplx(-0.6, 0.0);
    f.duration = 4.0;
    f.normalized = true;
    const int n = 40000;
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = -2.0 + (i + 0.5) * 4.0 / n;
        e += std::norm(eval_filter_time(f, t));
        CHECK(std::abs(eval_filter_time(f, t) - oracle::pulse(f.coeffs, 4.0, true, t)) < 1e-12);
    }
    CHECK(e * 4.0 / n == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(normalization_constant(f) == doctest::Approx(4.0 / f.coeffs.squaredNorm()));
}

TEST_CASE("matched receive filter is the conjugate time reverse")
{
    FilterParams tx;
    tx.coeffs = CVec::Zero(5);
    tx.coeffs << cplx(0.2, 0.3), cplx(1.0, -0.2), cplx(0.5, 0.0), cplx(-0.3, 0.7), cplx(0.1, 0.0);
    tx.duration = 4.0;
    tx.normalized = true;
    const FilterParams rx = matched_receive_filter(tx);
    CHECK_FALSE(rx.normalized);
    for (double t = -1.9; t < 2.0; t += 0.3) {
        CHECK(std::abs(eval_filter_time(rx, t) - std::conj(eval_filter_time(tx, -t))) < 1e-12);
    }
}

TEST_CASE("frequency response matches the Fourier integral")
{
    RrcParams p;
    p.rolloff_beta = 0.5;
    p.duration = 8.0;
    const FilterParams f = WindowedRrc(p).project(12);
    for (double freq : {0.0, 0.3, 0.55, 1.2}) {
        const int n = 20000;
        cplx acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double t = -4.0 + (i + 0.5) * 8.0 / n;
            acc += eval_filter_time(f, t) * std::polar(1.0, -2.0 * std::numbers::pi * freq * t);
        }
        CHECK(std::abs(acc * 8.0 / double(n) - eval_filter_freq(f, freq)) < 1e-6);
    }
}

TEST_CASE("baseline ACLR anchors at D = 32T")
{
    CHECK(std::abs(aclr_db(0.0, 32.0, 100) - (-21.47)) < 0.5);
    CHECK(std::abs(aclr_db(1.0, 32.0, 100) - (-6.53)) < 0.5);
}

TEST_CASE("ACLR decreases as the roll-off shrinks")
{
    double prev = aclr_db(1.0, 16.0, 50);
    for (double beta : {0.75, 0.5, 0.25, 0.0}) {
        const double v = aclr_db(beta, 16.0, 50);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("invalid filter and rrc parameters")
{
    FilterParams even;
    even.coeffs = CVec::Ones(4);
    CHECK_THROWS_AS(even.validate(), ConfigError);

    FilterParams zero;
    zero.coeffs = CVec::Zero(5);
    zero.normalized = true;
    CHECK_THROWS_AS(normalization_constant(zero), DegenerateFilterError);

    RrcParams p;
    p.rolloff_beta = 1.2;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.rolloff_beta = 1.0;
    CHECK_NOTHROW(p.validate());
    p.duration = 31.5;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}
