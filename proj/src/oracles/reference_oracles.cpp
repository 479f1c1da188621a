#include "wavelearn/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "wavelearn/errors.hpp"

namespace wavelearn::oracle {

namespace {

double log_sum_exp(const std::vector<double>& v)
{
    const double m = *std::max_element(v.begin(), v.end());
    double acc = 0.0;
    for (double x : v) {
        acc += std::exp(x - m);
    }
    return m + std::log(acc);
}

// Physicists' Gauss-Hermite nodes and weights by Golub-Welsch.
void hermite_rule(int order, std::vector<double>& nodes, std::vector<double>& weights)
{
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(order, order);
    for (int i = 1; i < order; ++i) {
        j(i, i - 1) = j(i - 1, i) = std::sqrt(i / 2.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    nodes.resize(static_cast<std::size_t>(order));
    weights.resize(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) {
        nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        weights[static_cast<std::size_t>(i)] = std::sqrt(std::numbers::pi) * v0 * v0;
    }
}

}  // namespace

std::vector<cplx> convolve(const std::vector<cplx>& s, const std::vector<cplx>& taps, int first_index)
{
    std::vector<cplx> r(s.size(), 0.0);
    for (std::size_t m = 0; m < s.size(); ++m) {
        for (std::size_t k = 0; k < taps.size(); ++k) {
            const long n = static_cast<long>(m) - (first_index + static_cast<long>(k));
            if (n >= 0 && n < static_cast<long>(s.size())) {
                r[m] += taps[k] * s[static_cast<std::size_t>(n)];
            }
        }
    }
    return r;
}

LlrBlock enumerate_llrs(const std::vector<cplx>& r, const Constellation& c, double noise_var)
{
    const int k = c.bits_per_symbol;
    LlrBlock out(r.size(), k);
    for (std::size_t n = 0; n < r.size(); ++n) {
        for (int b = 0; b < k; ++b) {
            std::vector<double> one;
            std::vector<double> zero;
            for (std::size_t i = 0; i < c.size(); ++i) {
                const double metric = -std::norm(r[n] - c.points[i]) / noise_var;
                ((i >> (k - 1 - b)) & 1U ? one : zero).push_back(metric);
            }
            out(n, b) = log_sum_exp(one) - log_sum_exp(zero);
        }
    }
    return out;
}

double gauss_hermite_gmi(const Constellation& c, double n0, int order)
{
    std::vector<double> x;
    std::vector<double> w;
    hermite_rule(order, x, w);
    const int k = c.bits_per_symbol;
    const double sigma = std::sqrt(n0 / 2.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (int a = 0; a < order; ++a) {
            for (int b = 0; b < order; ++b) {
                const cplx z(std::sqrt(2.0) * sigma * x[static_cast<std::size_t>(a)],
                             std::sqrt(2.0) * sigma * x[static_cast<std::size_t>(b)]);
                const double weight = w[static_cast<std::size_t>(a)] * w[static_cast<std::size_t>(b)] / std::numbers::pi;
                const auto llr = enumerate_llrs({c.points[i] + z}, c, n0);
                for (int j = 0; j < k; ++j) {
                    const double l = llr(0, j);
                    const double bit = static_cast<double>((i >> (k - 1 - j)) & 1U);
                    const double softplus = std::max(l, 0.0) + std::log1p(std::exp(-std::abs(l)));
                    loss += weight * (softplus - bit * l);
                }
            }
        }
    }
    return k - loss / (static_cast<double>(c.size()) * std::numbers::ln2);
}

std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                      const std::vector<double>& x, double h)
{
    std::vector<double> g(x.size());
    std::vector<double> p = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double step = h * std::max(1.0, std::abs(x[i]));
        p[i] = x[i] + step;
        const double up = f(p);
        p[i] = x[i] - step;
        const double down = f(p);
        p[i] = x[i];
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

void ReferenceAdam::step(std::vector<double>& x, const std::vector<double>& g, double lr)
{
    if (m.empty()) {
        m.assign(x.size(), 0.0);
        v.assign(x.size(), 0.0);
    }
    ++t;
    for (std::size_t i = 0; i < x.size(); ++i) {
        m[i] = 0.9 * m[i] + 0.1 * g[i];
        v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
        const double mh = m[i] / (1.0 - std::pow(0.9, static_cast<double>(t)));
        const double vh = v[i] / (1.0 - std::pow(0.999, static_cast<double>(t)));
        x[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
}

std::vector<double> welch_psd(const std::vector<cplx>& x, double fs, std::size_t nfft)
{
    if (nfft < 2 || x.size() < nfft) {
        throw DimensionError("welch_psd: signal shorter than one segment");
    }
    std::vector<double> window(nfft);
    double wpow = 0.0;
    for (std::size_t i = 0; i < nfft; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(nfft));
        wpow += window[i] * window[i];
    }
    Eigen::FFT<double> fft;
    std::vector<double> acc(nfft, 0.0);
    std::size_t segments = 0;
    for (std::size_t start = 0; start + nfft <= x.size(); start += nfft / 2) {
        std::vector<cplx> seg(nfft);
        for (std::size_t i = 0; i < nfft; ++i) {
            seg[i] = x[start + i] * window[i];
        }
        std::vector<cplx> spec;
        fft.fwd(spec, seg);
        for (std::size_t i = 0; i < nfft; ++i) {
            acc[i] += std::norm(spec[i]);
        }
        ++segments;
    }
    std::vector<double> out(nfft);
    for (std::size_t k = 0; k < nfft; ++k) {
        out[k] = acc[(k + nfft / 2) % nfft] / (static_cast<double>(segments) * fs * wpow);
    }
    return out;
}

std::vector<cplx> mc_noise_covariance(const FilterParams& rx, double n0, double symbol_period, int max_lag,
                                      std::size_t trials, Rng& rng, int per_symbol)
{
    const double d = rx.duration;
    const double dt = symbol_period / per_symbol;
    const auto width = static_cast<std::size_t>(std::llround(d / dt));
    std::vector<cplx> kernel(width);
    for (std::size_t j = 0; j < width; ++j) {
        kernel[j] = std::conj(pulse(rx.coeffs, d, rx.normalized, d / 2 - (static_cast<double>(j) + 0.5) * dt)) * dt;
    }
    const std::size_t stride = static_cast<std::size_t>(per_symbol);
    const std::size_t len = width + static_cast<std::size_t>(max_lag) * stride;
    std::vector<cplx> acc(static_cast<std::size_t>(max_lag) + 1, 0.0);
    std::vector<cplx> noise(len);
    std::vector<cplx> w(static_cast<std::size_t>(max_lag) + 1);
    for (std::size_t t = 0; t < trials; ++t) {
        for (auto& v : noise) {
            v = rng.complex_normal(n0 / dt);
        }
        for (std::size_t m = 0; m < w.size(); ++m) {
            cplx s = 0.0;
            for (std::size_t j = 0; j < width; ++j) {
                s += noise[j + m * stride] * kernel[j];
            }
            w[m] = s;
        }
        for (std::size_t l = 0; l < w.size(); ++l) {
            acc[l] += w[0] * std::conj(w[l]);
        }
    }
    for (auto& v : acc) {
        v /= static_cast<double>(trials);
    }
    return acc;
}

double nyquist_isi(const FilterParams& tx, const FilterParams& rx, double symbol_period)
{
    const int reach = static_cast<int>(std::ceil(tx.duration / symbol_period));
    const double peak = std::abs(cross_correlation(tx, rx, 0.0));
    double worst = 0.0;
    for (int l = -reach; l <= reach; ++l) {
        if (l != 0) {
            worst = std::max(worst, std::abs(cross_correlation(tx, rx, l * symbol_period)));
        }
    }
    return worst / peak;
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() || b.empty()) {
        throw DimensionError("ks_two_sample: empty sample");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) {
            ++i;
        }
        while (j < b.size() && b[j] <= x) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    const double lambda = (ne + 0.12 + 0.11 / ne) * d;
    if (lambda < 0.2) {
        return {d, 1.0};
    }
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        q += term;
        if (std::abs(term) < 1e-16) {
            break;
        }
    }
    return {d, std::clamp(q, 0.0, 1.0)};
}

}  // namespace wavelearn::oracle
