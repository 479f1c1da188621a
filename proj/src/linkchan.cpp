#include "wavelearn/linkchan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

#include <lapacke.h>

#include "wavelearn/errors.hpp"
#include "wavelearn/metrics.hpp"

namespace wavelearn {

void LinkConfig::validate() const
{
    if (block_length < 1) {
        throw ConfigError("block length must be at least 1");
    }
    if (bits_per_symbol < 1) {
        throw ConfigError("bits per symbol must be positive");
    }
    if (!(symbol_period > 0.0)) {
        throw ConfigError("symbol period must be positive");
    }
    if (!(n0 > 0.0)) {
        throw ConfigError("noise density N0 must be positive");
    }
}

double n0_from_snr_db(double snr_db)
{
    return std::pow(10.0, -snr_db / 10.0);
}

void TdlConfig::validate() const
{
    if (num_paths < 1) {
        throw ConfigError("TDL channel needs at least one path");
    }
    if (!(max_delay >= 0.0) || !std::isfinite(max_delay)) {
        throw ConfigError("TDL max delay must be finite and non-negative");
    }
    if (!(decay_constant > 0.0)) {
        throw ConfigError("TDL decay constant must be positive");
    }
}

std::vector<cplx> apply_channel(std::span<const cplx> s, const ChannelRealization& h)
{
    const auto n = static_cast<std::ptrdiff_t>(s.size());
    std::vector<cplx> r(s.size(), 0.0);
    for (std::size_t i = 0; i < h.taps.size(); ++i) {
        const std::ptrdiff_t ell = h.first_index + static_cast<std::ptrdiff_t>(i);
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, ell);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, n + ell);
        for (std::ptrdiff_t m = lo; m < hi; ++m) {
            r[static_cast<std::size_t>(m)] += h.taps[i] * s[static_cast<std::size_t>(m - ell)];
        }
    }
    return r;
}

BandedNoiseFactor::BandedNoiseFactor(const FilterParams& rx, double n0, double symbol_period, std::size_t n)
    : n_(n)
{
    rx.validate();
    if (n0 < 0.0) {
        throw ConfigError("noise density must be non-negative");
    }
    if (n0 == 0.0 || n == 0) {
        zero_ = true;
        return;
    }
    band_ = static_cast<int>(std::ceil(rx.duration / symbol_period - 1e-12));
    band_ = std::min<int>(band_, static_cast<int>(n) - 1);
    const int ld = band_ + 1;

    std::vector<cplx> cov(static_cast<std::size_t>(ld));
    for (int ell = 0; ell <= band_; ++ell) {
        cov[static_cast<std::size_t>(ell)] = noise_covariance(rx, n0, symbol_period, ell);
    }

    auto fill = [&](double jitter) {
        ab_.assign(static_cast<std::size_t>(ld) * n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            for (int d = 0; d <= band_ && j + static_cast<std::size_t>(d) < n; ++d) {
                // A(j + d, j) = E[w_{j+d} w_j^*] = conj(cov(d))
                cplx v = std::conj(cov[static_cast<std::size_t>(d)]);
                if (d == 0) {
                    v = cov[0].real() + jitter;
                }
                ab_[static_cast<std::size_t>(d) + j * static_cast<std::size_t>(ld)] = v;
            }
        }
        return LAPACKE_zpbtrf(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(n), band_, reinterpret_cast<lapack_complex_double*>(ab_.data()), ld);
    };

    if (fill(0.0) != 0) {
        const double trace = cov[0].real() * static_cast<double>(n);
        jittered_ = true;
        if (fill(1e-12 * trace) != 0) {
            throw ConditioningError("noise covariance is not positive definite even after diagonal jitter");
        }
    }
}

std::vector<cplx> BandedNoiseFactor::sample(Rng& rng) const
{
    std::vector<cplx> w(n_, 0.0);
    if (zero_) {
        return w;
    }
    std::vector<cplx> z(n_);
    for (auto& v : z) {
        v = rng.complex_normal(1.0);
    }
    const auto ld = static_cast<std::size_t>(band_ + 1);
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j0 = i >= static_cast<std::size_t>(band_) ? i - static_cast<std::size_t>(band_) : 0;
        cplx acc = 0.0;
        for (std::size_t j = j0; j <= i; ++j) {
            acc += ab_[(i - j) + j * ld] * z[j];
        }
        w[i] = acc;
    }
    return w;
}

std::vector<cplx> sample_correlated_noise(const FilterParams& rx, double n0, double symbol_period, std::size_t n,
                                          Rng& rng)
{
    return BandedNoiseFactor(rx, n0, symbol_period, n).sample(rng);
}

MultipathCIR synth_tdl_cir(const TdlConfig& cfg, Rng& rng)
{
    cfg.validate();
    std::vector<double> delays(static_cast<std::size_t>(cfg.num_paths));
    for (auto& tau : delays) {
        tau = rng.uniform(0.0, cfg.max_delay);
    }
    std::sort(delays.begin(), delays.end());
    MultipathCIR cir;
    cir.delays = delays;
    double energy = 0.0;
    for (double tau : delays) {
        cir.gains.push_back(rng.complex_normal(std::exp(-tau / cfg.decay_constant)));
        energy += std::norm(cir.gains.back());
    }
    if (cfg.normalize && energy > 0.0) {
        const double k = 1.0 / std::sqrt(energy);
        for (auto& a : cir.gains) {
            a *= k;
        }
    }
    return cir;
}

std::vector<cplx> transmit(const BitBlock& bits, const FilterParams& tx, const FilterParams& rx,
                           const Constellation& c, const MultipathCIR& cir, double symbol_period)
{
    const auto s = map_bits(bits, c);
    return apply_channel(s, channel_taps(tx, rx, cir, symbol_period));
}

std::vector<cplx> simulate_link(const BitBlock& bits, const FilterParams& tx, const FilterParams& rx,
                                const Constellation& c, const MultipathCIR& cir, const LinkConfig& cfg, Rng& rng)
{
    if (bits.rows != cfg.block_length || bits.bits_per_symbol != c.bits_per_symbol) {
        throw DimensionError("bit block does not match the link configuration");
    }
    auto r = transmit(bits, tx, rx, c, cir, cfg.symbol_period);
    const auto w = sample_correlated_noise(rx, cfg.n0, cfg.symbol_period, r.size(), rng);
    for (std::size_t m = 0; m < r.size(); ++m) {
        r[m] += w[m];
    }
    return r;
}

double baseline_rate(const FilterParams& tx, const FilterParams& rx, const Constellation& c, double snr_db,
                     std::size_t block_length, std::size_t num_blocks, std::uint64_t seed, int threads)
{
    LinkConfig cfg;
    cfg.block_length = block_length;
    cfg.bits_per_symbol = c.bits_per_symbol;
    cfg.symbol_period = tx.symbol_period;
    cfg.n0 = n0_from_snr_db(snr_db);
    cfg.validate();
    const auto awgn = MultipathCIR::awgn();
    const ChannelRealization taps = channel_taps(tx, rx, awgn, cfg.symbol_period);
    const cplx h0 = taps.tap(0);
    const double var = noise_covariance(rx, cfg.n0, cfg.symbol_period, 0).real() / std::norm(h0);
    const BandedNoiseFactor noise(rx, cfg.n0, cfg.symbol_period, block_length);
    std::vector<double> bce(num_blocks, 0.0);
    auto run_block = [&](std::size_t b) {
        Rng rng(seed, b);
        const BitBlock bits = BitBlock::random(block_length, c.bits_per_symbol, rng);
        auto r = apply_channel(map_bits(bits, c), taps);
        const auto w = noise.sample(rng);
        for (std::size_t m = 0; m < r.size(); ++m) {
            r[m] = (r[m] + w[m]) / h0;
        }
        bce[b] = bce_bits(exact_awgn_llrs(r, c, var), bits);
    };
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t b = t; b < num_blocks; b += workers) {
                run_block(b);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    double acc = 0.0;
    for (double v : bce) {
        acc += v;
    }
    return c.bits_per_symbol - acc / static_cast<double>(num_blocks);
}

std::vector<cplx> simulate_two_user(const BitBlock& bits1, const BitBlock& bits2, const FilterParams& tx1,
                                    const FilterParams& tx2, const FilterParams& rx, const Constellation& c1,
                                    const Constellation& c2, const LinkConfig& cfg, Rng& rng)
{
    if (bits1.rows != cfg.block_length || bits2.rows != cfg.block_length) {
        throw DimensionError("bit blocks do not match the link configuration");
    }
    const auto awgn = MultipathCIR::awgn();
    auto r = transmit(bits1, tx1, rx, c1, awgn, cfg.symbol_period);
    const auto r2 = transmit(bits2, tx2, rx, c2, awgn, cfg.symbol_period);
    const auto w = sample_correlated_noise(rx, cfg.n0, cfg.symbol_period, r.size(), rng);
    for (std::size_t m = 0; m < r.size(); ++m) {
        r[m] += r2[m] + w[m];
    }
    return r;
}

void write_cir_csv(const std::string& path, const std::vector<MultipathCIR>& cirs, const std::string& provenance)
{
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path);
    }
    out.precision(17);
    out << provenance << "\n";
    out << "realization_id,p,re(a),im(a),tau\n";
    for (std::size_t r = 0; r < cirs.size(); ++r) {
        for (std::size_t p = 0; p < cirs[r].num_paths(); ++p) {
            out << r << ',' << p << ',' << cirs[r].gains[p].real() << ',' << cirs[r].gains[p].imag() << ','
                << cirs[r].delays[p] << '\n';
        }
    }
}

std::vector<MultipathCIR> read_cir_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read " + path);
    }
    std::map<long, MultipathCIR> byid;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("realization_id", 0) == 0) {
            continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        long id = 0;
        long p = 0;
        double re = 0.0;
        double im = 0.0;
        double tau = 0.0;
        if (!(fields >> id >> p >> re >> im >> tau)) {
            throw ConfigError("malformed CIR row in " + path + ": " + line);
        }
        auto& cir = byid[id];
        cir.gains.emplace_back(re, im);
        cir.delays.push_back(tau);
    }
    std::vector<MultipathCIR> out;
    for (auto& [id, cir] : byid) {
        cir.validate();
        out.push_back(std::move(cir));
    }
    return out;
}

NoiseProjector::NoiseProjector(double duration, double symbol_period, int half_width)
    : duration_(duration), symbol_period_(symbol_period), half_width_(half_width)
{
    const double ratio = duration / symbol_period;
    segments_ = static_cast<int>(std::lround(ratio));
    if (segments_ < 1 || std::abs(ratio - segments_) > 1e-9) {
        throw UnsupportedError("differentiable noise synthesis needs D to be an integer multiple of T");
    }
    const bool even = segments_ % 2 == 0;
    first_segment_ = even ? -segments_ / 2 : -(segments_ - 1) / 2;
    const double offset = even ? 0.0 : -0.5;

    const int ns = 2 * half_width + 1;
    const double x = symbol_period / duration;
    Eigen::MatrixXcd g0(ns, ns);
    for (int i = 0; i < ns; ++i) {
        for (int j = 0; j < ns; ++j) {
            const double a = 2.0 * std::numbers::pi * (i - j) * x;
            g0(i, j) = i == j ? cplx(1.0) : (std::polar(1.0, a) - 1.0) / cplx(0.0, a);
        }
    }
    g0 *= symbol_period;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(g0);
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const double floor = 1e-14 * lam.maxCoeff();
    std::vector<int> keep;
    for (int i = 0; i < ns; ++i) {
        if (lam(i) > floor) {
            keep.push_back(i);
        }
    }
    factor_.resize(ns, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        factor_.col(static_cast<Eigen::Index>(k)) = eig.eigenvectors().col(keep[k]) * std::sqrt(lam(keep[k]));
    }

    phases_.resize(segments_, ns);
    for (int k = 0; k < segments_; ++k) {
        for (int s = 0; s < ns; ++s) {
            const double tau = (first_segment_ + k + offset) * symbol_period;
            phases_(k, s) = std::polar(1.0, 2.0 * std::numbers::pi * (s - half_width) * tau / duration);
        }
    }
}

Eigen::MatrixXcd NoiseProjector::sample(std::size_t n, double n0, Rng& rng) const
{
    const auto ns = phases_.cols();
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), ns);
    if (n0 == 0.0 || n == 0) {
        return y;
    }
    const auto rows = static_cast<Eigen::Index>(n) + segments_ - 1;
    Eigen::MatrixXcd z(rows, factor_.cols());
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
            z(r, c) = rng.complex_normal(1.0);
        }
    }
    const Eigen::MatrixXcd xi = std::sqrt(n0) * (z * factor_.transpose());
    for (int k = 0; k < segments_; ++k) {
        y.array() += xi.middleRows(k, static_cast<Eigen::Index>(n)).array().rowwise() * phases_.row(k).array();
    }
    return y;
}

}  // namespace wavelearn
