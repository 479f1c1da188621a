#include "wavelearn/ad/link_ops.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "wavelearn/errors.hpp"

namespace wavelearn::ad {

namespace {

Tensor real_part(const Eigen::VectorXcd& v)
{
    Tensor t(Shape{static_cast<std::size_t>(v.size())});
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        t[static_cast<std::size_t>(i)] = v(i).real();
    }
    return t;
}

Tensor imag_part(const Eigen::VectorXcd& v)
{
    Tensor t(Shape{static_cast<std::size_t>(v.size())});
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        t[static_cast<std::size_t>(i)] = v(i).imag();
    }
    return t;
}

Eigen::VectorXcd join(const Tensor& re, const Tensor& im)
{
    Eigen::VectorXcd v(static_cast<Eigen::Index>(re.size()));
    for (std::size_t i = 0; i < re.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = cplx(re[i], im[i]);
    }
    return v;
}

void require_vector_pair(const char* op, const ComplexVar& v)
{
    if (v.re.shape().size() != 1 || v.re.shape() != v.im.shape()) {
        throw DimensionError(std::string(op) + ": expected matching 1-D parts, got " + shape_string(v.re.shape()) +
                             " and " + shape_string(v.im.shape()));
    }
}

// Splits an interleaved [n, 2] tensor into real and imaginary [n] parts.
ComplexVar split_pairs(Var x)
{
    const std::size_t n = x.shape()[0];
    return {reshape(slice(x, 1, 0, 1), Shape{n}), reshape(slice(x, 1, 1, 2), Shape{n})};
}

// e^{j 2 pi s tau / D} for s = -S .. S.
void harmonics(double tau, double duration, int half_width, cplx* out)
{
    const double w = 2.0 * std::numbers::pi * tau / duration;
    const cplx step = std::polar(1.0, w);
    cplx z = std::polar(1.0, -w * half_width);
    for (int i = 0; i <= 2 * half_width; ++i) {
        out[i] = z;
        z *= step;
    }
}

}  // namespace

ComplexVar complex_leaf(Tape& tape, const Eigen::VectorXcd& v)
{
    return {tape.leaf(real_part(v)), tape.leaf(imag_part(v))};
}

ComplexVar complex_constant(Tape& tape, const Eigen::VectorXcd& v)
{
    return {tape.constant(real_part(v)), tape.constant(imag_part(v))};
}

Eigen::VectorXcd complex_value(const ComplexVar& v)
{
    return join(v.re.value(), v.im.value());
}

ComplexVar filter_taps(const ComplexVar& theta, const ComplexVar& psi, const TapMatrices& b, double duration)
{
    require_vector_pair("filter_taps", theta);
    require_vector_pair("filter_taps", psi);
    const auto mats = std::make_shared<const TapMatrices>(b);
    const Eigen::VectorXcd th = complex_value(theta);
    const Eigen::VectorXcd ps = complex_value(psi);
    const double nrm2 = th.squaredNorm();
    if (nrm2 == 0.0) {
        throw DegenerateFilterError("filter_taps: all-zero transmit coefficients");
    }
    const double c = std::sqrt(duration / nrm2) / duration;
    const std::size_t taps = mats->matrices.size();
    Tensor out(Shape{taps, 2});
    for (std::size_t l = 0; l < taps; ++l) {
        if (mats->matrices[l].rows() != th.size()) {
            throw DimensionError("filter_taps: tap matrix size does not match coefficient count");
        }
        const cplx h = c * ps.dot(mats->matrices[l] * th);
        out.data[2 * l] = h.real();
        out.data[2 * l + 1] = h.imag();
    }
    Var pairs = theta.re.tape()->record(
        std::move(out), {theta.re, theta.im, psi.re, psi.im},
        [theta, psi, mats, duration](Tape& tp, const Tensor& g) {
            const Eigen::VectorXcd th2 = join(tp.value(theta.re), tp.value(theta.im));
            const Eigen::VectorXcd ps2 = join(tp.value(psi.re), tp.value(psi.im));
            const double n2 = th2.squaredNorm();
            const double c2 = std::sqrt(duration / n2) / duration;
            Eigen::VectorXcd g_theta = Eigen::VectorXcd::Zero(th2.size());
            Eigen::VectorXcd g_psi = Eigen::VectorXcd::Zero(th2.size());
            double scale_term = 0.0;
            for (std::size_t l = 0; l < mats->matrices.size(); ++l) {
                const cplx a(g.data[2 * l], -g.data[2 * l + 1]);  // conj of the output adjoint
                const Eigen::MatrixXcd& bl = mats->matrices[l];
                const Eigen::VectorXcd v = bl * th2;
                const cplx q = ps2.dot(v);
                g_theta += a * c2 * (bl.transpose() * ps2.conjugate());
                g_psi += a * c2 * v;
                scale_term += (a * q).real();
            }
            const double k = c2 * scale_term / n2;
            if (tp.requires_grad(theta.re)) {
                Tensor& gr = tp.grad_buffer(theta.re);
                for (Eigen::Index j = 0; j < th2.size(); ++j) {
                    gr[static_cast<std::size_t>(j)] += g_theta(j).real() - k * th2(j).real();
                }
            }
            if (tp.requires_grad(theta.im)) {
                Tensor& gi = tp.grad_buffer(theta.im);
                for (Eigen::Index j = 0; j < th2.size(); ++j) {
                    gi[static_cast<std::size_t>(j)] += -g_theta(j).imag() - k * th2(j).imag();
                }
            }
            if (tp.requires_grad(psi.re)) {
                Tensor& gr = tp.grad_buffer(psi.re);
                for (Eigen::Index j = 0; j < th2.size(); ++j) {
                    gr[static_cast<std::size_t>(j)] += g_psi(j).real();
                }
            }
            if (tp.requires_grad(psi.im)) {
                Tensor& gi = tp.grad_buffer(psi.im);
                for (Eigen::Index j = 0; j < th2.size(); ++j) {
                    gi[static_cast<std::size_t>(j)] += g_psi(j).imag();
                }
            }
        });
    return split_pairs(pairs);
}

ComplexVar normalize_points(const ComplexVar& raw)
{
    require_vector_pair("normalize_points", raw);
    const std::size_t n = raw.re.shape()[0];
    Var re = sub(raw.re, expand(mean(raw.re), 0, n));
    Var im = sub(raw.im, expand(mean(raw.im), 0, n));
    Var energy = mean(add(square(re), square(im)));
    Var inv = div(raw.re.tape()->constant(Tensor::scalar(1.0)), sqrt(energy));
    return {mul_scalar(re, inv), mul_scalar(im, inv)};
}

Var aclr(const ComplexVar& theta, const InbandMatrix& e)
{
    require_vector_pair("aclr", theta);
    const std::size_t n = theta.re.shape()[0];
    if (static_cast<std::size_t>(e.entries.rows()) != n) {
        throw DimensionError("aclr: in-band matrix size does not match coefficient count");
    }
    Tape& tape = *theta.re.tape();
    Tensor et(Shape{n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            et.data[i * n + j] = e.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    Var em = tape.constant(std::move(et));
    auto quad = [&](Var x) { return sum(mul(reshape(matmul(reshape(x, Shape{1, n}), em), Shape{n}), x)); };
    Var inband = add(quad(theta.re), quad(theta.im));
    Var energy = add(sum(square(theta.re)), sum(square(theta.im)));
    return add_scalar(scale(div(energy, inband), 1.0 / e.duration), -1.0);
}

Var instant_power(const ComplexVar& theta, const ComplexVar& points, const PowerSamples& samples)
{
    require_vector_pair("instant_power", theta);
    require_vector_pair("instant_power", points);
    const auto smp = std::make_shared<const PowerSamples>(samples);
    const int half = static_cast<int>((theta.re.shape()[0] - 1) / 2);
    const std::size_t ns = theta.re.shape()[0];
    const double d = samples.duration;
    const double tsym = samples.symbol_period;

    // Visits each contributing symbol of draw i with its harmonic row.
    auto visit = [smp, half, d, tsym](std::size_t i, std::vector<cplx>& e, auto&& fn) {
        const double t = smp->times[i];
        for (int n = -smp->reach; n <= smp->reach; ++n) {
            const double tau = t - n * tsym;
            if (std::abs(tau) >= d / 2) {
                continue;
            }
            harmonics(tau, d, half, e.data());
            fn(smp->symbols[i * smp->span() + static_cast<std::size_t>(n + smp->reach)], e);
        }
    };

    const Eigen::VectorXcd th = complex_value(theta);
    const Eigen::VectorXcd pts = complex_value(points);
    const double nrm2 = th.squaredNorm();
    if (nrm2 == 0.0) {
        throw DegenerateFilterError("instant_power: all-zero transmit coefficients");
    }
    const double c2 = 1.0 / (d * nrm2);
    Tensor out(Shape{smp->count()});
    std::vector<cplx> e(ns);
    for (std::size_t i = 0; i < smp->count(); ++i) {
        cplx x = 0.0;
        visit(i, e, [&](std::uint32_t k, const std::vector<cplx>& h) {
            cplx gn = 0.0;
            for (std::size_t s = 0; s < ns; ++s) {
                gn += th(static_cast<Eigen::Index>(s)) * h[s];
            }
            x += pts(k) * gn;
        });
        out[i] = c2 * std::norm(x);
    }

    return theta.re.tape()->record(
        std::move(out), {theta.re, theta.im, points.re, points.im},
        [theta, points, smp, visit, ns, d](Tape& tp, const Tensor& g) {
            const Eigen::VectorXcd th2 = join(tp.value(theta.re), tp.value(theta.im));
            const Eigen::VectorXcd pts2 = join(tp.value(points.re), tp.value(points.im));
            const double n2 = th2.squaredNorm();
            const double cc = 1.0 / (d * n2);
            Eigen::VectorXcd g_theta = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(ns));
            Eigen::VectorXcd g_pts = Eigen::VectorXcd::Zero(pts2.size());
            double norm_term = 0.0;
            std::vector<cplx> e2(ns);
            std::vector<cplx> u(ns);
            for (std::size_t i = 0; i < smp->count(); ++i) {
                if (g[i] == 0.0) {
                    continue;
                }
                cplx x = 0.0;
                std::fill(u.begin(), u.end(), cplx(0.0));
                visit(i, e2, [&](std::uint32_t k, const std::vector<cplx>& h) {
                    cplx gn = 0.0;
                    for (std::size_t s = 0; s < ns; ++s) {
                        gn += th2(static_cast<Eigen::Index>(s)) * h[s];
                        u[s] += pts2(k) * h[s];
                    }
                    x += pts2(k) * gn;
                });
                const cplx w = g[i] * 2.0 * cc * std::conj(x);
                for (std::size_t s = 0; s < ns; ++s) {
                    g_theta(static_cast<Eigen::Index>(s)) += w * u[s];
                }
                norm_term += g[i] * cc * std::norm(x);
                visit(i, e2, [&](std::uint32_t k, const std::vector<cplx>& h) {
                    cplx gn = 0.0;
                    for (std::size_t s = 0; s < ns; ++s) {
                        gn += th2(static_cast<Eigen::Index>(s)) * h[s];
                    }
                    g_pts(k) += w * gn;
                });
            }
            const double k2 = 2.0 * norm_term / n2;
            if (tp.requires_grad(theta.re)) {
                Tensor& gr = tp.grad_buffer(theta.re);
                for (std::size_t s = 0; s < ns; ++s) {
                    gr[s] += g_theta(static_cast<Eigen::Index>(s)).real() - k2 * th2(static_cast<Eigen::Index>(s)).real();
                }
            }
            if (tp.requires_grad(theta.im)) {
                Tensor& gi = tp.grad_buffer(theta.im);
                for (std::size_t s = 0; s < ns; ++s) {
                    gi[s] += -g_theta(static_cast<Eigen::Index>(s)).imag() - k2 * th2(static_cast<Eigen::Index>(s)).imag();
                }
            }
            if (tp.requires_grad(points.re)) {
                Tensor& gr = tp.grad_buffer(points.re);
                for (Eigen::Index k = 0; k < pts2.size(); ++k) {
                    gr[static_cast<std::size_t>(k)] += g_pts(k).real();
                }
            }
            if (tp.requires_grad(points.im)) {
                Tensor& gi = tp.grad_buffer(points.im);
                for (Eigen::Index k = 0; k < pts2.size(); ++k) {
                    gi[static_cast<std::size_t>(k)] += -g_pts(k).imag();
                }
            }
        });
}

ComplexVar project_noise(const Eigen::MatrixXcd& y, const ComplexVar& psi, double duration)
{
    require_vector_pair("project_noise", psi);
    const auto rows = static_cast<std::size_t>(y.rows());
    const auto cols = static_cast<std::size_t>(y.cols());
    if (cols != psi.re.shape()[0]) {
        throw DimensionError("project_noise: noise matrix has " + std::to_string(cols) + " columns, filter has " +
                             shape_string(psi.re.shape()));
    }
    Tape& tape = *psi.re.tape();
    Tensor yr(Shape{rows, cols});
    Tensor yi(Shape{rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const cplx v = y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            yr.data[r * cols + c] = v.real();
            yi.data[r * cols + c] = v.imag();
        }
    }
    Var ym_re = tape.constant(std::move(yr));
    Var ym_im = tape.constant(std::move(yi));
    Var pr = reshape(psi.re, Shape{cols, 1});
    Var pi = reshape(psi.im, Shape{cols, 1});
    const double k = 1.0 / duration;
    Var w_re = scale(add(matmul(ym_re, pr), matmul(ym_im, pi)), k);
    Var w_im = scale(sub(matmul(ym_im, pr), matmul(ym_re, pi)), k);
    return {reshape(w_re, Shape{rows}), reshape(w_im, Shape{rows})};
}

ComplexVar apply_taps(const ComplexVar& s, const ComplexVar& h, int first_index)
{
    return {sub(tap_conv(s.re, h.re, first_index), tap_conv(s.im, h.im, first_index)),
            add(tap_conv(s.re, h.im, first_index), tap_conv(s.im, h.re, first_index))};
}

}  // namespace wavelearn::ad
