#include "doctest.h"

#include <cmath>

#include "wavelearn/closed_form.hpp"
#include "wavelearn/errors.hpp"
#include "wavelearn/oracles.hpp"
#include "wavelearn/rng.hpp"

using namespace wavelearn;

namespace {

FilterParams random_filter(int half_width, double duration, bool normalized, Rng& rng)
{
    FilterParams f;
    f.coeffs = CVec::Zero(2 * half_width + 1);
    for (Eigen::Index i = 0; i < f.coeffs.size(); ++i) {
        f.coeffs(i) = rng.complex_normal(1.0);
    }
    f.duration = duration;
    f.normalized = normalized;
    return f;
}

}  // namespace

TEST_CASE("convolution matrix matches quadrature")
{
    const double d = 8.0;
    for (double t : {-7.3, -2.5, 0.0, 1.1, 6.9}) {
        const auto a = conv_matrix(t, d, 3);
        for (int s1 = -3; s1 <= 3; ++s1) {
            for (int s2 = -3; s2 <= 3; ++s2) {
                CHECK(std::abs(a.entries(s1 + 3, s2 + 3) - oracle::conv_entry(s1, s2, t, d)) < 1e-9);
            }
        }
    }
    CHECK(conv_matrix(8.5, d, 2).entries.norm() == 0.0);
}

TEST_CASE("noise correlation matrix matches quadrature")
{
    const double d = 4.0;
    for (double t : {-3.0, -1.0, 0.0, 2.0, 3.5}) {
        const auto a = noise_corr_matrix(t, d, 3);
        for (int s1 = -3; s1 <= 3; ++s1) {
            for (int s2 = -3; s2 <= 3; ++s2) {
                CHECK(std::abs(a.entries(s1 + 3, s2 + 3) - oracle::noise_corr_entry(s1, s2, t, d)) < 1e-9);
            }
        }
    }
}

TEST_CASE("in-band matrix matches quadrature")
{
    const auto e = inband_matrix(1.0, 8.0, 5);
    for (int s1 = -5; s1 <= 5; ++s1) {
        for (int s2 = -5; s2 <= 5; ++s2) {
            CHECK(std::abs(e.entries(s1 + 5, s2 + 5) - oracle::inband_entry(s1, s2, 1.0, 8.0)) < 1e-10);
        }
    }
    CHECK((e.entries - e.entries.transpose()).norm() < 1e-14);
}

TEST_CASE("cross-correlation uses psi^H A theta")
{
    Rng rng(11);
    const FilterParams tx = random_filter(4, 8.0, true, rng);
    const FilterParams rx = random_filter(4, 8.0, false, rng);
    for (double t : {-5.0, -1.0, 0.0, 0.5, 3.0, 7.5}) {
        const cplx ref = oracle::cross_correlation(tx, rx, t);
        CHECK(std::abs(filter_cross_correlation(tx, rx, t) - ref) < 1e-9);
    }
    // The transposed bilinear form disagrees with the defining integral.
    const auto a = conv_matrix(1.0, 8.0, 4);
    const cplx swapped = time_scale(tx) * (tx.coeffs.transpose() * a.entries * rx.coeffs)(0);
    CHECK(std::abs(swapped - oracle::cross_correlation(tx, rx, 1.0)) > 1e-3);
}

TEST_CASE("noise covariance matches quadrature and is Hermitian in the lag")
{
    Rng rng(12);
    const FilterParams rx = random_filter(3, 4.0, false, rng);
    for (int ell = -4; ell <= 4; ++ell) {
        const cplx c = noise_covariance(rx, 0.3, 1.0, ell);
        CHECK(std::abs(c - oracle::noise_covariance(rx, 0.3, 1.0, ell)) < 1e-9);
        CHECK(std::abs(c - std::conj(noise_covariance(rx, 0.3, 1.0, -ell))) < 1e-12);
    }
    CHECK(noise_covariance(rx, 0.3, 1.0, 0).imag() == 0.0);
    CHECK(noise_covariance(rx, 0.3, 1.0, 5) == cplx(0.0));
}

TEST_CASE("ACLR matches the spectral oracle")
{
    Rng rng(13);
    const FilterParams tx = random_filter(5, 8.0, true, rng);
    const auto e = inband_matrix(1.0, 8.0, 5);
    CHECK(aclr(tx, e) == doctest::Approx(oracle::aclr(tx, 1.0)).epsilon(1e-8));
    CHECK(inband_energy(tx, e) > 0.0);
    CHECK(inband_energy(tx, e) <= 1.0 + 1e-12);
}

TEST_CASE("multipath taps match sampled convolution")
{
    Rng rng(14);
    const FilterParams tx = random_filter(3, 4.0, true, rng);
    const FilterParams rx = random_filter(3, 4.0, false, rng);
    MultipathCIR cir;
    cir.gains = {cplx(0.8, 0.1), cplx(-0.3, 0.4), cplx(0.1, -0.2)};
    cir.delays = {0.0, 0.7, 2.3};
    const auto h = channel_taps(tx, rx, cir, 1.0);
    const auto [lo, hi] = tap_range(cir, 4.0, 1.0);
    CHECK(h.first_index == lo);
    CHECK(h.last_index() == hi);
    const auto ref = oracle::channel_taps(tx, rx, cir, 1.0, lo, hi);
    double scale = 0.0;
    for (const auto& v : ref) {
        scale = std::max(scale, std::abs(v));
    }
    for (int ell = lo; ell <= hi; ++ell) {
        CHECK(std::abs(h.tap(ell) - ref[static_cast<std::size_t>(ell - lo)]) < 1e-6 * scale);
    }
    CHECK(h.tap(hi + 1) == cplx(0.0));
}

TEST_CASE("tap matrices reproduce the taps")
{
    Rng rng(15);
    const FilterParams tx = random_filter(2, 4.0, true, rng);
    const FilterParams rx = random_filter(2, 4.0, false, rng);
    const MultipathCIR cir = MultipathCIR::awgn();
    const auto b = tap_matrices(cir, 4.0, 2, 1.0);
    const auto h = channel_taps(tx, rx, cir, 1.0);
    for (std::size_t i = 0; i < b.matrices.size(); ++i) {
        const cplx v = time_scale(tx) * rx.coeffs.dot(b.matrices[i] * tx.coeffs);
        CHECK(std::abs(v - h.tap(b.first_index + static_cast<int>(i))) < 1e-12);
    }
}

TEST_CASE("mismatched filter geometry is rejected")
{
    Rng rng(16);
    const FilterParams tx = random_filter(2, 4.0, true, rng);
    const FilterParams rx = random_filter(3, 4.0, false, rng);
    CHECK_THROWS_AS(filter_cross_correlation(tx, rx, 0.0), DimensionError);
    CHECK_THROWS_AS(inband_matrix(0.0, 4.0, 2), ConfigError);
}
