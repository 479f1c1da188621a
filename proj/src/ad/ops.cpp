#include "wavelearn/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "wavelearn/errors.hpp"

namespace wavelearn::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

Tape& tape_of(Var a)
{
    if (!a.valid()) {
        throw DimensionError("operation on an unbound variable");
    }
    return *a.tape();
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b)
{
    std::ostringstream msg;
    msg << op << ": incompatible shapes " << shape_string(a) << " and " << shape_string(b);
    throw DimensionError(msg.str());
}

void require_same(const char* op, Var a, Var b)
{
    if (a.shape() != b.shape()) {
        shape_error(op, a.shape(), b.shape());
    }
}

void require_rank(const char* op, Var x, std::size_t rank)
{
    if (x.shape().size() != rank) {
        std::ostringstream msg;
        msg << op << ": expected rank " << rank << ", got shape " << shape_string(x.shape());
        throw DimensionError(msg.str());
    }
}

// Elementwise unary op with derivative expressed through input and output.
template <typename F, typename DF>
Var unary(Var x, F f, DF df)
{
    Tape& t = tape_of(x);
    const Tensor& xv = x.value();
    Tensor out(xv.shape);
    for (std::size_t i = 0; i < xv.size(); ++i) {
        out[i] = f(xv[i]);
    }
    return t.record(std::move(out), {x}, [x, df](Tape& tp, const Tensor& g) {
        const Tensor& xv2 = tp.value(x);
        Tensor& gx = tp.grad_buffer(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            gx[i] += g[i] * df(xv2[i]);
        }
    });
}

}  // namespace

Var add(Var a, Var b)
{
    require_same("add", a, b);
    Tape& t = tape_of(a);
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += bv[i];
    }
    return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
        for (Var v : {a, b}) {
            if (tp.requires_grad(v)) {
                Tensor& gv = tp.grad_buffer(v);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    gv[i] += g[i];
                }
            }
        }
    });
}

Var sub(Var a, Var b)
{
    require_same("sub", a, b);
    Tape& t = tape_of(a);
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= bv[i];
    }
    return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
        if (tp.requires_grad(a)) {
            Tensor& ga = tp.grad_buffer(a);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
            }
        }
        if (tp.requires_grad(b)) {
            Tensor& gb = tp.grad_buffer(b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gb[i] -= g[i];
            }
        }
    });
}

Var mul(Var a, Var b)
{
    require_same("mul", a, b);
    Tape& t = tape_of(a);
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= bv[i];
    }
    return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
        const Tensor& av = tp.value(a);
        const Tensor& bv2 = tp.value(b);
        if (tp.requires_grad(a)) {
            Tensor& ga = tp.grad_buffer(a);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * bv2[i];
            }
        }
        if (tp.requires_grad(b)) {
            Tensor& gb = tp.grad_buffer(b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gb[i] += g[i] * av[i];
            }
        }
    });
}

Var div(Var a, Var b)
{
    require_same("div", a, b);
    Tape& t = tape_of(a);
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] /= bv[i];
    }
    return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
        const Tensor& av = tp.value(a);
        const Tensor& bv2 = tp.value(b);
        if (tp.requires_grad(a)) {
            Tensor& ga = tp.grad_buffer(a);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] / bv2[i];
            }
        }
        if (tp.requires_grad(b)) {
            Tensor& gb = tp.grad_buffer(b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gb[i] -= g[i] * av[i] / (bv2[i] * bv2[i]);
            }
        }
    });
}

Var neg(Var x)
{
    return scale(x, -1.0);
}

Var scale(Var x, double c)
{
    Tape& t = tape_of(x);
    Tensor out = x.value();
    for (double& v : out.data) {
        v *= c;
    }
    return t.record(std::move(out), {x}, [x, c](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad_buffer(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            gx[i] += c * g[i];
        }
    });
}

Var add_scalar(Var x, double c)
{
    Tape& t = tape_of(x);
    Tensor out = x.value();
    for (double& v : out.data) {
        v += c;
    }
    return t.record(std::move(out), {x}, [x](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad_buffer(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            gx[i] += g[i];
        }
    });
}

Var mul_scalar(Var x, Var s)
{
    if (s.size() != 1) {
        shape_error("mul_scalar", x.shape(), s.shape());
    }
    Tape& t = tape_of(x);
    const double c = s.value()[0];
    Tensor out = x.value();
    for (double& v : out.data) {
        v *= c;
    }
    return t.record(std::move(out), {x, s}, [x, s](Tape& tp, const Tensor& g) {
        const double c2 = tp.value(s)[0];
        if (tp.requires_grad(x)) {
            Tensor& gx = tp.grad_buffer(x);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += c2 * g[i];
            }
        }
        if (tp.requires_grad(s)) {
            const Tensor& xv = tp.value(x);
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                acc += g[i] * xv[i];
            }
            tp.grad_buffer(s)[0] += acc;
        }
    });
}

Var square(Var x)
{
    return unary(x, [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

Var sqrt(Var x)
{
    return unary(x, [](double v) { return std::sqrt(v); }, [](double v) { return 0.5 / std::sqrt(v); });
}

Var exp(Var x)
{
    return unary(x, [](double v) { return std::exp(v); }, [](double v) { return std::exp(v); });
}

Var log(Var x)
{
    return unary(x, [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

Var relu(Var x)
{
    return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Var clamp(Var x, double lo, double hi)
{
    return unary(
        x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
        [lo, hi](double v) { return v > lo && v < hi ? 1.0 : 0.0; });
}

namespace {
double logistic(double v)
{
    if (v >= 0.0) {
        return 1.0 / (1.0 + std::exp(-v));
    }
    const double e = std::exp(v);
    return e / (1.0 + e);
}
}  // namespace

Var sigmoid(Var x)
{
    return unary(x, logistic, [](double v) {
        const double s = logistic(v);
        return s * (1.0 - s);
    });
}

Var tanh(Var x)
{
    return unary(x, [](double v) { return std::tanh(v); }, [](double v) {
        const double th = std::tanh(v);
        return 1.0 - th * th;
    });
}

Var softplus(Var x)
{
    return unary(x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }, logistic);
}

Var sum(Var x)
{
    Tape& t = tape_of(x);
    double acc = 0.0;
    for (double v : x.value().data) {
        acc += v;
    }
    return t.record(Tensor::scalar(acc), {x}, [x](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad_buffer(x);
        for (double& v : gx.data) {
            v += g[0];
        }
    });
}

Var mean(Var x)
{
    const double n = static_cast<double>(x.size());
    return scale(sum(x), 1.0 / n);
}

Var sum_axis(Var x, std::size_t axis)
{
    const Shape& s = x.shape();
    if (axis >= s.size()) {
        throw DimensionError("sum_axis: axis out of range for shape " + shape_string(s));
    }
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) {
        outer *= s[i];
    }
    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < s.size(); ++i) {
        inner *= s[i];
    }
    const std::size_t n = s[axis];
    Shape out_shape = s;
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
    Tensor out(out_shape, 0.0);
    const Tensor& xv = x.value();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < n; ++j) {
            const double* src = &xv.data[(o * n + j) * inner];
            double* dst = &out.data[o * inner];
            for (std::size_t i = 0; i < inner; ++i) {
                dst[i] += src[i];
            }
        }
    }
    return tape_of(x).record(std::move(out), {x}, [x, outer, inner, n](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad_buffer(x);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t j = 0; j < n; ++j) {
                double* dst = &gx.data[(o * n + j) * inner];
                const double* src = &g.data[o * inner];
                for (std::size_t i = 0; i < inner; ++i) {
                    dst[i] += src[i];
                }
            }
        }
    });
}

Var matmul(Var a, Var b)
{
    require_rank("matmul", a, 2);
    require_rank("matmul", b, 2);
    const std::size_t m = a.shape()[0];
    const std::size_t k = a.shape()[1];
    const std::size_t n = b.shape()[1];
    if (b.shape()[0] != k) {
        shape_error("matmul", a.shape(), b.shape());
    }
    Tensor out(Shape{m, n});
    {
        ConstMapMat am(a.value().data.data(), m, k);
        ConstMapMat bm(b.value().data.data(), k, n);
        MapMat om(out.data.data(), m, n);
        om.noalias() = am * bm;
    }
    return tape_of(a).record(std::move(out), {a, b}, [a, b, m, k, n](Tape& tp, const Tensor& g) {
        ConstMapMat gm(g.data.data(), m, n);
        if (tp.requires_grad(a)) {
            ConstMapMat bm(tp.value(b).data.data(), k, n);
            MapMat ga(tp.grad_buffer(a).data.data(), m, k);
            ga.noalias() += gm * bm.transpose();
        }
        if (tp.requires_grad(b)) {
            ConstMapMat am(tp.value(a).data.data(), m, k);
            MapMat gb(tp.grad_buffer(b).data.data(), k, n);
            gb.noalias() += am.transpose() * gm;
        }
    });
}

Var reshape(Var x, Shape shape)
{
    if (shape_size(shape) != x.size()) {
        shape_error("reshape", x.shape(), shape);
    }
    Tensor out(std::move(shape), x.value().data);
    return tape_of(x).record(std::move(out), {x}, [x](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad_buffer(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            gx[i] += g[i];
        }
    });
}

Var expand(Var x, std::size_t axis, std::size_t n)
{
    const Shape& s = x.shape();
    if (axis > s.size()) {
        throw DimensionError("expand: axis out of range for shape " + shape_string(s));
    }
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) {
        outer *= s[i];
    }
    std::size_t inner = 1;
    for (std::size_t i = axis; i < s.size(); ++i) {
        inner *= s[i];
    }
    Shape out_shape = s;
    out_shape.insert(out_shape.begin() + static_cast<std::ptrdiff_t>(axis), n);
    Tensor out(out_shape);
    const Tensor& xv = x.value();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < n; ++j) {
            std::copy_n(&xv.data[o * inner], inner, &out.data[(o * n + j) * inner]);
        }
    }
    return tape_of(x).record(std::move(out), {x}, [x, outer, inner, n](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad_buffer(x);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t j = 0; j < n; ++j) {
                const double* src = &g.data[(o * n + j) * inner];
                double* dst = &gx.data[o * inner];
                for (std::size_t i = 0; i < inner; ++i) {
                    dst[i] += src[i];
                }
            }
        }
    });
}

Var gather(Var table, const std::vector<std::size_t>& indices, Shape out_shape)
{
    require_rank("gather", table, 1);
    if (shape_size(out_shape) != indices.size()) {
        throw DimensionError("gather: index count does not match output shape " + shape_string(out_shape));
    }
    const Tensor& tv = table.value();
    Tensor out(std::move(out_shape));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= tv.size()) {
            throw DimensionError("gather: index out of range for table of shape " + shape_string(tv.shape));
        }
        out[i] = tv[indices[i]];
    }
    return tape_of(table).record(std::move(out), {table}, [table, indices](Tape& tp, const Tensor& g) {
        Tensor& gt = tp.grad_buffer(table);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            gt[indices[i]] += g[i];
        }
    });
}

Var concat(const std::vector<Var>& parts, std::size_t axis)
{
    if (parts.empty()) {
        throw DimensionError("concat: no inputs");
    }
    const Shape& ref = parts.front().shape();
    if (axis >= ref.size()) {
        throw DimensionError("concat: axis out of range for shape " + shape_string(ref));
    }
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) {
        outer *= ref[i];
    }
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const Var& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != ref.size()) {
            shape_error("concat", ref, s);
        }
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i != axis && s[i] != ref[i]) {
                shape_error("concat", ref, s);
            }
        }
        widths.push_back(p.size() / outer);
        total += widths.back();
    }
    Shape out_shape = ref;
    out_shape[axis] = 0;
    for (const Var& p : parts) {
        out_shape[axis] += p.shape()[axis];
    }
    Tensor out(out_shape);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& pv = parts[k].value();
        for (std::size_t o = 0; o < outer; ++o) {
            std::copy_n(&pv.data[o * widths[k]], widths[k], &out.data[o * total + offset]);
        }
        offset += widths[k];
    }
    return tape_of(parts.front()).record(std::move(out), parts, [parts, widths, outer, total](Tape& tp, const Tensor& g) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < parts.size(); ++k) {
            if (tp.requires_grad(parts[k])) {
                Tensor& gp = tp.grad_buffer(parts[k]);
                for (std::size_t o = 0; o < outer; ++o) {
                    for (std::size_t i = 0; i < widths[k]; ++i) {
                        gp.data[o * widths[k] + i] += g.data[o * total + off + i];
                    }
                }
            }
            off += widths[k];
        }
    });
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end)
{
    const Shape& s = x.shape();
    if (axis >= s.size() || begin > end || end > s[axis]) {
        throw DimensionError("slice: range out of bounds for shape " + shape_string(s));
    }
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) {
        outer *= s[i];
    }
    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < s.size(); ++i) {
        inner *= s[i];
    }
    const std::size_t n = s[axis];
    const std::size_t w = end - begin;
    Shape out_shape = s;
    out_shape[axis] = w;
    Tensor out(out_shape);
    const Tensor& xv = x.value();
    for (std::size_t o = 0; o < outer; ++o) {
        std::copy_n(&xv.data[(o * n + begin) * inner], w * inner, &out.data[o * w * inner]);
    }
    return tape_of(x).record(std::move(out), {x}, [x, outer, inner, n, w, begin](Tape& tp, const Tensor& g) {
        Tensor& gx = tp.grad_buffer(x);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < w * inner; ++i) {
                gx.data[(o * n + begin) * inner + i] += g.data[o * w * inner + i];
            }
        }
    });
}

Var bias_add(Var x, Var b)
{
    require_rank("bias_add", b, 1);
    const std::size_t c = b.shape()[0];
    if (x.shape().empty() || x.shape().back() != c) {
        shape_error("bias_add", x.shape(), b.shape());
    }
    Tensor out = x.value();
    const Tensor& bv = b.value();
    const std::size_t rows = out.size() / c;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < c; ++j) {
            out.data[r * c + j] += bv[j];
        }
    }
    return tape_of(x).record(std::move(out), {x, b}, [x, b, rows, c](Tape& tp, const Tensor& g) {
        if (tp.requires_grad(x)) {
            Tensor& gx = tp.grad_buffer(x);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += g[i];
            }
        }
        if (tp.requires_grad(b)) {
            Tensor& gb = tp.grad_buffer(b);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t j = 0; j < c; ++j) {
                    gb[j] += g.data[r * c + j];
                }
            }
        }
    });
}

Var conv1d(Var x, Var w, std::size_t dilation)
{
    require_rank("conv1d", x, 3);
    require_rank("conv1d", w, 3);
    const std::size_t batch = x.shape()[0];
    const std::size_t len = x.shape()[1];
    const std::size_t cin = x.shape()[2];
    const std::size_t kw = w.shape()[0];
    const std::size_t cout = w.shape()[2];
    if (w.shape()[1] != cin || kw % 2 == 0 || dilation == 0) {
        shape_error("conv1d", x.shape(), w.shape());
    }
    const auto half = static_cast<std::ptrdiff_t>(kw / 2);
    const auto d = static_cast<std::ptrdiff_t>(dilation);
    const auto n_len = static_cast<std::ptrdiff_t>(len);

    Tensor out(Shape{batch, len, cout}, 0.0);
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t k = 0; k < kw; ++k) {
            const std::ptrdiff_t shift = (static_cast<std::ptrdiff_t>(k) - half) * d;
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n_len, n_len - shift);
            if (hi <= lo) {
                continue;
            }
            ConstMapMat xm(&xv.data[(b * len + static_cast<std::size_t>(lo + shift)) * cin],
                           hi - lo, static_cast<Eigen::Index>(cin));
            ConstMapMat wm(&wv.data[k * cin * cout], static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(cout));
            MapMat om(&out.data[(b * len + static_cast<std::size_t>(lo)) * cout], hi - lo,
                      static_cast<Eigen::Index>(cout));
            om.noalias() += xm * wm;
        }
    }
    return tape_of(x).record(std::move(out), {x, w}, [=](Tape& tp, const Tensor& g) {
        const Tensor& xv2 = tp.value(x);
        const Tensor& wv2 = tp.value(w);
        const bool need_x = tp.requires_grad(x);
        const bool need_w = tp.requires_grad(w);
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t k = 0; k < kw; ++k) {
                const std::ptrdiff_t shift = (static_cast<std::ptrdiff_t>(k) - half) * d;
                const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
                const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n_len, n_len - shift);
                if (hi <= lo) {
                    continue;
                }
                ConstMapMat gm(&g.data[(b * len + static_cast<std::size_t>(lo)) * cout], hi - lo,
                               static_cast<Eigen::Index>(cout));
                if (need_x) {
                    ConstMapMat wm(&wv2.data[k * cin * cout], static_cast<Eigen::Index>(cin),
                                   static_cast<Eigen::Index>(cout));
                    MapMat gx(&tp.grad_buffer(x).data[(b * len + static_cast<std::size_t>(lo + shift)) * cin],
                              hi - lo, static_cast<Eigen::Index>(cin));
                    gx.noalias() += gm * wm.transpose();
                }
                if (need_w) {
                    ConstMapMat xm(&xv2.data[(b * len + static_cast<std::size_t>(lo + shift)) * cin], hi - lo,
                                   static_cast<Eigen::Index>(cin));
                    MapMat gw(&tp.grad_buffer(w).data[k * cin * cout], static_cast<Eigen::Index>(cin),
                              static_cast<Eigen::Index>(cout));
                    gw.noalias() += xm.transpose() * gm;
                }
            }
        }
    });
}

Var depthwise_conv1d(Var x, Var w, std::size_t dilation)
{
    require_rank("depthwise_conv1d", x, 3);
    require_rank("depthwise_conv1d", w, 2);
    const std::size_t batch = x.shape()[0];
    const std::size_t len = x.shape()[1];
    const std::size_t ch = x.shape()[2];
    const std::size_t kw = w.shape()[0];
    if (w.shape()[1] != ch || kw % 2 == 0 || dilation == 0) {
        shape_error("depthwise_conv1d", x.shape(), w.shape());
    }
    const auto half = static_cast<std::ptrdiff_t>(kw / 2);
    const auto d = static_cast<std::ptrdiff_t>(dilation);
    const auto n_len = static_cast<std::ptrdiff_t>(len);

    Tensor out(Shape{batch, len, ch}, 0.0);
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t k = 0; k < kw; ++k) {
            const std::ptrdiff_t shift = (static_cast<std::ptrdiff_t>(k) - half) * d;
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n_len, n_len - shift);
            const double* wk = &wv.data[k * ch];
            for (std::ptrdiff_t n = lo; n < hi; ++n) {
                const double* src = &xv.data[(b * len + static_cast<std::size_t>(n + shift)) * ch];
                double* dst = &out.data[(b * len + static_cast<std::size_t>(n)) * ch];
                for (std::size_t c = 0; c < ch; ++c) {
                    dst[c] += wk[c] * src[c];
                }
            }
        }
    }
    return tape_of(x).record(std::move(out), {x, w}, [=](Tape& tp, const Tensor& g) {
        const Tensor& xv2 = tp.value(x);
        const Tensor& wv2 = tp.value(w);
        const bool need_x = tp.requires_grad(x);
        const bool need_w = tp.requires_grad(w);
        Tensor* gx = need_x ? &tp.grad_buffer(x) : nullptr;
        Tensor* gw = need_w ? &tp.grad_buffer(w) : nullptr;
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t k = 0; k < kw; ++k) {
                const std::ptrdiff_t shift = (static_cast<std::ptrdiff_t>(k) - half) * d;
                const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
                const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n_len, n_len - shift);
                const double* wk = &wv2.data[k * ch];
                for (std::ptrdiff_t n = lo; n < hi; ++n) {
                    const std::size_t src_off = (b * len + static_cast<std::size_t>(n + shift)) * ch;
                    const double* gn = &g.data[(b * len + static_cast<std::size_t>(n)) * ch];
                    if (gx) {
                        double* dst = &gx->data[src_off];
                        for (std::size_t c = 0; c < ch; ++c) {
                            dst[c] += wk[c] * gn[c];
                        }
                    }
                    if (gw) {
                        const double* src = &xv2.data[src_off];
                        double* dst = &gw->data[k * ch];
                        for (std::size_t c = 0; c < ch; ++c) {
                            dst[c] += src[c] * gn[c];
                        }
                    }
                }
            }
        }
    });
}

Var pointwise_conv1d(Var x, Var w)
{
    require_rank("pointwise_conv1d", x, 3);
    require_rank("pointwise_conv1d", w, 2);
    const std::size_t batch = x.shape()[0];
    const std::size_t len = x.shape()[1];
    if (w.shape()[0] != x.shape()[2]) {
        shape_error("pointwise_conv1d", x.shape(), w.shape());
    }
    Var flat = reshape(x, Shape{batch * len, x.shape()[2]});
    return reshape(matmul(flat, w), Shape{batch, len, w.shape()[1]});
}

Var tap_conv(Var x, Var h, int first_index)
{
    require_rank("tap_conv", x, 2);
    const std::size_t batch = x.shape()[0];
    const auto len = static_cast<std::ptrdiff_t>(x.shape()[1]);
    const bool shared = h.shape().size() == 1;
    if (!shared && (h.shape().size() != 2 || h.shape()[0] != batch)) {
        shape_error("tap_conv", x.shape(), h.shape());
    }
    const std::size_t taps = h.shape().back();
    Tensor out(x.shape(), 0.0);
    const Tensor& xv = x.value();
    const Tensor& hv = h.value();
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xr = &xv.data[b * static_cast<std::size_t>(len)];
        const double* hr = &hv.data[shared ? 0 : b * taps];
        double* yr = &out.data[b * static_cast<std::size_t>(len)];
        for (std::size_t i = 0; i < taps; ++i) {
            const std::ptrdiff_t ell = first_index + static_cast<std::ptrdiff_t>(i);
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, ell);
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(len, len + ell);
            for (std::ptrdiff_t m = lo; m < hi; ++m) {
                yr[m] += hr[i] * xr[m - ell];
            }
        }
    }
    return tape_of(x).record(std::move(out), {x, h}, [=](Tape& tp, const Tensor& g) {
        const Tensor& xv2 = tp.value(x);
        const Tensor& hv2 = tp.value(h);
        Tensor* gx = tp.requires_grad(x) ? &tp.grad_buffer(x) : nullptr;
        Tensor* gh = tp.requires_grad(h) ? &tp.grad_buffer(h) : nullptr;
        for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t row = b * static_cast<std::size_t>(len);
            const std::size_t hoff = shared ? 0 : b * taps;
            for (std::size_t i = 0; i < taps; ++i) {
                const std::ptrdiff_t ell = first_index + static_cast<std::ptrdiff_t>(i);
                const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, ell);
                const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(len, len + ell);
                double acc = 0.0;
                for (std::ptrdiff_t m = lo; m < hi; ++m) {
                    const double gm = g.data[row + static_cast<std::size_t>(m)];
                    if (gx) {
                        gx->data[row + static_cast<std::size_t>(m - ell)] += hv2.data[hoff + i] * gm;
                    }
                    acc += xv2.data[row + static_cast<std::size_t>(m - ell)] * gm;
                }
                if (gh) {
                    gh->data[hoff + i] += acc;
                }
            }
        }
    });
}

ComplexVar complex_mul(const ComplexVar& a, const ComplexVar& b)
{
    require_same("complex_mul", a.re, b.re);
    require_same("complex_mul", a.im, b.im);
    require_same("complex_mul", a.re, a.im);
    Tape& t = tape_of(a.re);
    const Tensor& ar = a.re.value();
    const Tensor& ai = a.im.value();
    const Tensor& br = b.re.value();
    const Tensor& bi = b.im.value();
    Tensor re(ar.shape);
    Tensor im(ar.shape);
    for (std::size_t i = 0; i < ar.size(); ++i) {
        re[i] = ar[i] * br[i] - ai[i] * bi[i];
        im[i] = ar[i] * bi[i] + ai[i] * br[i];
    }
    const std::vector<Var> parents{a.re, a.im, b.re, b.im};
    // d re = br dar - bi dai + ar dbr - ai dbi; d im = bi dar + br dai + ai dbr + ar dbi
    Var out_re = t.record(std::move(re), parents, [a, b](Tape& tp, const Tensor& g) {
        const Tensor& ar2 = tp.value(a.re);
        const Tensor& ai2 = tp.value(a.im);
        const Tensor& br2 = tp.value(b.re);
        const Tensor& bi2 = tp.value(b.im);
        const std::pair<Var, int> targets[] = {{a.re, 0}, {a.im, 1}, {b.re, 2}, {b.im, 3}};
        for (const auto& [v, which] : targets) {
            if (!tp.requires_grad(v)) {
                continue;
            }
            Tensor& gv = tp.grad_buffer(v);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double coef = which == 0 ? br2[i] : which == 1 ? -bi2[i] : which == 2 ? ar2[i] : -ai2[i];
                gv[i] += g[i] * coef;
            }
        }
    });
    Var out_im = t.record(std::move(im), parents, [a, b](Tape& tp, const Tensor& g) {
        const Tensor& ar2 = tp.value(a.re);
        const Tensor& ai2 = tp.value(a.im);
        const Tensor& br2 = tp.value(b.re);
        const Tensor& bi2 = tp.value(b.im);
        const std::pair<Var, int> targets[] = {{a.re, 0}, {a.im, 1}, {b.re, 2}, {b.im, 3}};
        for (const auto& [v, which] : targets) {
            if (!tp.requires_grad(v)) {
                continue;
            }
            Tensor& gv = tp.grad_buffer(v);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double coef = which == 0 ? bi2[i] : which == 1 ? br2[i] : which == 2 ? ai2[i] : ar2[i];
                gv[i] += g[i] * coef;
            }
        }
    });
    return {out_re, out_im};
}

ComplexVar complex_add(const ComplexVar& a, const ComplexVar& b)
{
    return {add(a.re, b.re), add(a.im, b.im)};
}

ComplexVar complex_conj(const ComplexVar& a)
{
    return {a.re, neg(a.im)};
}

ComplexVar complex_matmul(const ComplexVar& a, const ComplexVar& b)
{
    return {sub(matmul(a.re, b.re), matmul(a.im, b.im)), add(matmul(a.re, b.im), matmul(a.im, b.re))};
}

Var complex_abs2(const ComplexVar& a)
{
    return add(square(a.re), square(a.im));
}

}  // namespace wavelearn::ad
