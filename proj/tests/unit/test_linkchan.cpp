#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "wavelearn/closed_form.hpp"
#include "wavelearn/errors.hpp"
#include "wavelearn/linkchan.hpp"
#include "wavelearn/oracles.hpp"

using namespace wavelearn;

namespace {

FilterParams skewed_rx(double duration, int half_width)
{
    FilterParams f;
    f.coeffs = CVec::Zero(2 * half_width + 1);
    for (int s = -half_width; s <= half_width; ++s) {
        f.coeffs(s + half_width) = std::polar(1.0 / (1.0 + std::abs(s - 1)), 0.7 * s);
    }
    f.duration = duration;
    return f;
}

// E[w_m conj(w_{m+l})] over all pairs of all draws.
template <typename Draw>
std::vector<cplx> empirical_cov(Draw draw, int trials, int max_lag)
{
    std::vector<cplx> acc(static_cast<std::size_t>(max_lag + 1), 0.0);
    std::vector<double> count(acc.size(), 0.0);
    for (int t = 0; t < trials; ++t) {
        const std::vector<cplx> w = draw(t);
        for (int l = 0; l <= max_lag; ++l) {
            for (std::size_t m = 0; m + static_cast<std::size_t>(l) < w.size(); ++m) {
                acc[static_cast<std::size_t>(l)] += w[m] * std::conj(w[m + static_cast<std::size_t>(l)]);
                count[static_cast<std::size_t>(l)] += 1.0;
            }
        }
    }
    for (std::size_t l = 0; l < acc.size(); ++l) {
        acc[l] /= count[l];
    }
    return acc;
}

}  // namespace

TEST_CASE("discrete channel matches direct convolution")
{
    Rng rng(1);
    std::vector<cplx> s(40);
    for (auto& v : s) {
        v = rng.complex_normal(1.0);
    }
    ChannelRealization h;
    h.first_index = -3;
    for (int i = 0; i < 7; ++i) {
        h.taps.push_back(rng.complex_normal(1.0));
    }
    const auto r = apply_channel(s, h);
    const auto ref = oracle::convolve(s, h.taps, h.first_index);
    REQUIRE(r.size() == s.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(std::abs(r[i] - ref[i]) < 1e-12);
    }
}

TEST_CASE("banded Cholesky noise has the closed-form covariance, not its conjugate")
{
    const FilterParams rx = skewed_rx(4.0, 3);
    const double n0 = 0.5;
    const BandedNoiseFactor f(rx, n0, 1.0, 64);
    CHECK(f.bandwidth() == 4);
    CHECK_FALSE(f.jittered());
    const auto emp = empirical_cov(
        [&](int t) {
            Rng rng(7, static_cast<std::uint64_t>(t));
            return f.sample(rng);
        },
        3000, 3);
    const double scale = noise_covariance(rx, n0, 1.0, 0).real();
    const double tol = 6.0 * scale / std::sqrt(3000.0 * 60.0);
    for (int l = 0; l <= 3; ++l) {
        CHECK(std::abs(emp[static_cast<std::size_t>(l)] - noise_covariance(rx, n0, 1.0, l)) < tol);
    }
    const cplx c1 = noise_covariance(rx, n0, 1.0, 1);
    REQUIRE(std::abs(c1.imag()) > 10.0 * tol);
    CHECK(std::abs(emp[1] - std::conj(c1)) > 5.0 * tol);
}

TEST_CASE("differentiable noise synthesis has the closed-form covariance")
{
    for (double duration : {4.0, 5.0}) {
        const FilterParams rx = skewed_rx(duration, 3);
        const double n0 = 0.5;
        const NoiseProjector proj(duration, 1.0, 3);
        const auto emp = empirical_cov(
            [&](int t) {
                Rng rng(9, static_cast<std::uint64_t>(t));
                const Eigen::MatrixXcd y = proj.sample(48, n0, rng);
                const Eigen::VectorXcd w = y * rx.coeffs.conjugate() / duration;
                return std::vector<cplx>(w.data(), w.data() + w.size());
            },
            3000, 3);
        const double scale = noise_covariance(rx, n0, 1.0, 0).real();
        const double tol = 6.0 * scale / std::sqrt(3000.0 * 45.0);
        for (int l = 0; l <= 3; ++l) {
            CHECK(std::abs(emp[static_cast<std::size_t>(l)] - noise_covariance(rx, n0, 1.0, l)) < tol);
        }
        CHECK(std::abs(emp[1] - std::conj(noise_covariance(rx, n0, 1.0, 1))) > 5.0 * tol);
    }
}

TEST_CASE("noise synthesis needs an integer number of segments")
{
    CHECK_THROWS_AS(NoiseProjector(4.5, 1.0, 3), UnsupportedError);
}

TEST_CASE("tapped delay line realizations")
{
    TdlConfig cfg;
    Rng a(5);
    Rng b(5);
    for (int i = 0; i < 50; ++i) {
        const MultipathCIR c = synth_tdl_cir(cfg, a);
        const MultipathCIR d = synth_tdl_cir(cfg, b);
        CHECK(c.gains == d.gains);
        REQUIRE(c.num_paths() == static_cast<std::size_t>(cfg.num_paths));
        double energy = 0.0;
        for (std::size_t p = 0; p < c.num_paths(); ++p) {
            energy += std::norm(c.gains[p]);
            CHECK(c.delays[p] >= 0.0);
            CHECK(c.delays[p] <= cfg.max_delay);
        }
        CHECK(energy == doctest::Approx(1.0));
    }
    TdlConfig bad;
    bad.num_paths = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("noiseless link equals the transmitted convolution")
{
    Rng rng(6);
    const Constellation c = qam_gray(4);
    RrcParams p;
    p.duration = 8.0;
    const FilterParams tx = WindowedRrc(p).project(20);
    const FilterParams rx = matched_receive_filter(tx);
    const BitBlock bits = BitBlock::random(64, 4, rng);
    LinkConfig cfg;
    cfg.block_length = 64;
    cfg.n0 = 0.0;
    const auto r = simulate_link(bits, tx, rx, c, MultipathCIR::awgn(), cfg, rng);
    const auto ref = oracle::convolve(map_bits(bits, c), channel_taps(tx, rx, MultipathCIR::awgn(), 1.0).taps,
                                      channel_taps(tx, rx, MultipathCIR::awgn(), 1.0).first_index);
    for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(std::abs(r[i] - ref[i]) < 1e-12);
    }
}

TEST_CASE("two users superimpose")
{
    Rng rng(8);
    const Constellation c = qam_gray(4);
    RrcParams p;
    p.duration = 8.0;
    const FilterParams tx = WindowedRrc(p).project(20);
    const FilterParams rx = matched_receive_filter(tx);
    const BitBlock b1 = BitBlock::random(32, 4, rng);
    const BitBlock b2 = BitBlock::random(32, 4, rng);
    LinkConfig cfg;
    cfg.block_length = 32;
    cfg.n0 = 0.0;
    const auto r = simulate_two_user(b1, b2, tx, tx, rx, c, c, cfg, rng);
    const auto r1 = transmit(b1, tx, rx, c, MultipathCIR::awgn(), 1.0);
    const auto r2 = transmit(b2, tx, rx, c, MultipathCIR::awgn(), 1.0);
    for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(std::abs(r[i] - r1[i] - r2[i]) < 1e-12);
    }
}

TEST_CASE("CIR CSV round trip")
{
    Rng rng(10);
    std::vector<MultipathCIR> cirs{synth_tdl_cir(TdlConfig{}, rng), MultipathCIR::awgn()};
    const auto path = (std::filesystem::temp_directory_path() / "wavelearn_cir_test.csv").string();
    write_cir_csv(path, cirs, "# test");
    const auto back = read_cir_csv(path);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        REQUIRE(back[i].num_paths() == cirs[i].num_paths());
        for (std::size_t p = 0; p < cirs[i].num_paths(); ++p) {
            CHECK(back[i].gains[p] == cirs[i].gains[p]);
            CHECK(back[i].delays[p] == cirs[i].delays[p]);
        }
    }
    std::filesystem::remove(path);
}

TEST_CASE("baseline rate approaches the Gauss-Hermite GMI for a near-Nyquist pulse")
{
    RrcParams p;
    p.rolloff_beta = 1.0;
    p.duration = 32.0;
    const FilterParams tx = WindowedRrc(p, false).project(100);
    const FilterParams rx = matched_receive_filter(tx);
    const Constellation c = qam_gray(4);
    const double r = baseline_rate(tx, rx, c, 10.0, 1000, 20, 3, 1);
    CHECK(r == doctest::Approx(oracle::gauss_hermite_gmi(c, 0.1)).epsilon(0.02));
}
