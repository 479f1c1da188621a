#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "wavelearn/closed_form.hpp"
#include "wavelearn/metrics.hpp"
#include "wavelearn/oracles.hpp"

using namespace wavelearn;

namespace {

FilterParams desk_pulse(double beta = 0.25)
{
    RrcParams p;
    p.rolloff_beta = beta;
    p.duration = 8.0;
    return WindowedRrc(p).project(20);
}

}  // namespace

TEST_CASE("BCE and rate on confident and uninformative LLRs")
{
    BitBlock bits(3, 2);
    bits(0, 0) = 1;
    bits(1, 1) = 1;
    LlrBlock sure(3, 2);
    LlrBlock blind(3, 2);
    for (std::size_t n = 0; n < 3; ++n) {
        for (int k = 0; k < 2; ++k) {
            sure(n, k) = bits(n, k) ? 1e3 : -1e3;
        }
    }
    CHECK(bce_bits(blind, bits) == doctest::Approx(2.0));
    CHECK(bmd_rate_estimate(blind, bits) == doctest::Approx(0.0));
    CHECK(bce_bits(sure, bits) < 1e-11);
    CHECK(bce_bits(sure, bits) > 0.0);
    const double capped = std::log2(1.0 + std::exp(-kLlrCap));
    CHECK(bce_bits(sure, bits) == doctest::Approx(2.0 * capped));
}

TEST_CASE("instantaneous power matches the superposed waveform")
{
    const FilterParams tx = desk_pulse();
    const Constellation c = qam_gray(4);
    Rng rng(2);
    const PowerSamples s = PowerSamples::draw(tx.duration, tx.symbol_period, c.size(), 50, rng);
    const auto p = instant_powers(tx, c, s);
    for (std::size_t i = 0; i < s.count(); ++i) {
        cplx x = 0.0;
        for (int n = -s.reach; n <= s.reach; ++n) {
            const std::size_t sym = s.symbols[i * s.span() + static_cast<std::size_t>(n + s.reach)];
            x += c.points[sym] * oracle::pulse(tx.coeffs, tx.duration, true, s.times[i] - n * tx.symbol_period);
        }
        CHECK(p[i] == doctest::Approx(std::norm(x)).epsilon(1e-10));
    }
}

TEST_CASE("power CCDF is a non-increasing probability")
{
    const FilterParams tx = desk_pulse();
    Rng rng(3);
    std::vector<double> th;
    for (int i = 0; i <= 40; ++i) {
        th.push_back(-2.0 + 0.3 * i);
    }
    const CurveSeries c = power_ccdf(tx, qam_gray(4), th, 20000, 128, rng);
    REQUIRE(c.y.size() == th.size());
    for (std::size_t i = 0; i < c.y.size(); ++i) {
        CHECK(c.y[i] >= 0.0);
        CHECK(c.y[i] <= 1.0);
        if (i > 0) {
            CHECK(c.y[i] <= c.y[i - 1]);
        }
    }
    CHECK(c.y.back() < c.y.front());
}

TEST_CASE("PAPR excess is non-increasing in the threshold")
{
    std::vector<double> p{0.1, 0.5, 1.0, 2.0, 3.5, 4.2, 7.0};
    double prev = papr_excess(p, 0.0);
    CHECK(prev == doctest::Approx(18.3 / 7.0));
    for (double eps = 0.5; eps < 8.0; eps += 0.5) {
        const double v = papr_excess(p, eps);
        CHECK(v <= prev);
        prev = v;
    }
    CHECK(papr_excess(p, 7.0) == 0.0);
}

TEST_CASE("average power of a block")
{
    // N unit-energy pulses spread over the burst length (N - 1) T + D.
    CHECK(average_power(100, 1.0, 8.0) == doctest::Approx(100.0 / 107.0));
    CHECK(average_power(1, 1.0, 8.0) == doctest::Approx(1.0 / 8.0));
}

TEST_CASE("analytic PSD agrees with a Welch estimate of the transmitted waveform")
{
    const FilterParams tx = desk_pulse(0.5);
    const Constellation c = qam_gray(4);
    Rng rng(4);
    const int os = 8;
    const std::size_t symbols = 20000;
    const int span = static_cast<int>(tx.duration) * os;
    std::vector<cplx> pulse(static_cast<std::size_t>(span));
    for (int i = 0; i < span; ++i) {
        pulse[static_cast<std::size_t>(i)] = eval_filter_time(tx, -tx.duration / 2 + (i + 0.5) / os);
    }
    std::vector<cplx> x(symbols * os + static_cast<std::size_t>(span), 0.0);
    for (std::size_t n = 0; n < symbols; ++n) {
        const cplx s = c.points[rng.integer(16)];
        for (int i = 0; i < span; ++i) {
            x[n * os + static_cast<std::size_t>(i)] += s * pulse[static_cast<std::size_t>(i)];
        }
    }
    const std::size_t nfft = 256;
    const auto welch = oracle::welch_psd(x, os, nfft);
    std::vector<double> f;
    for (std::size_t k = 0; k < nfft; ++k) {
        f.push_back((static_cast<double>(k) - nfft / 2.0) * os / nfft);
    }
    const auto ana = psd_linear(tx, f);
    double w0 = 0.0;
    double a0 = 0.0;
    for (std::size_t k = 0; k < nfft; ++k) {
        if (std::abs(f[k]) < 0.5) {
            w0 += welch[k];
            a0 += ana[k];
        }
    }
    for (std::size_t k = 0; k < nfft; ++k) {
        if (std::abs(f[k]) < 0.5) {
            CHECK(std::abs(10.0 * std::log10((welch[k] / w0) / (ana[k] / a0))) < 0.5);
        }
    }
    const CurveSeries db = analytic_psd(tx, f);
    CHECK(*std::max_element(db.y.begin(), db.y.end()) == doctest::Approx(0.0));
}

TEST_CASE("power distribution is invariant to a one-symbol shift")
{
    const FilterParams tx = desk_pulse();
    const Constellation c = qam_gray(4);
    Rng ra(5);
    Rng rb(6);
    PowerSamples a = PowerSamples::draw(tx.duration, tx.symbol_period, c.size(), 20000, ra);
    PowerSamples b = PowerSamples::draw(tx.duration, tx.symbol_period, c.size(), 20000, rb);
    for (double& t : b.times) {
        t += tx.symbol_period;
    }
    const auto ks = oracle::ks_two_sample(instant_powers(tx, c, a), instant_powers(tx, c, b));
    CHECK(ks.p_value > 0.01);

    // Past the drawn symbol window the sum loses terms and the law changes.
    for (double& t : b.times) {
        t += 7.0 * tx.symbol_period;
    }
    const auto off = oracle::ks_two_sample(instant_powers(tx, c, a), instant_powers(tx, c, b));
    CHECK(off.p_value < 0.01);
}
