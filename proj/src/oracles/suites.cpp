#include "wavelearn/oracle_suites.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "wavelearn/ad/link_ops.hpp"
#include "wavelearn/closed_form.hpp"
#include "wavelearn/errors.hpp"
#include "wavelearn/linkchan.hpp"
#include "wavelearn/oracles.hpp"
#include "wavelearn/trainer.hpp"

namespace wavelearn::oracle {

using ad::ComplexVar;
using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

bool SuiteReport::passed() const
{
    return std::all_of(cases.begin(), cases.end(), [](const SuiteCase& c) { return c.passed(); });
}

double SuiteReport::max_error() const
{
    double m = 0.0;
    for (const auto& c : cases) {
        m = std::max(m, c.error);
    }
    return m;
}

std::vector<SuiteCase> SuiteReport::failures() const
{
    std::vector<SuiteCase> out;
    std::copy_if(cases.begin(), cases.end(), std::back_inserter(out), [](const SuiteCase& c) { return !c.passed(); });
    return out;
}

namespace {

CVec random_coeffs(int half_width, Rng& rng)
{
    CVec c(2 * half_width + 1);
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        c(i) = rng.complex_normal();
    }
    return c;
}

FilterParams make_filter(CVec coeffs, double duration, bool normalized)
{
    FilterParams f;
    f.coeffs = std::move(coeffs);
    f.duration = duration;
    f.symbol_period = 1.0;
    f.normalized = normalized;
    return f;
}

template <typename M, typename F>
double matrix_error(const M& closed, F oracle_entry, int half)
{
    double diff = 0.0;
    double scale = 0.0;
    for (int s1 = -half; s1 <= half; ++s1) {
        for (int s2 = -half; s2 <= half; ++s2) {
            const auto ref = oracle_entry(s1, s2);
            diff = std::max(diff, std::abs(closed(s1 + half, s2 + half) - ref));
            scale = std::max(scale, std::abs(ref));
        }
    }
    return scale > 0.0 ? diff / scale : diff;
}

}  // namespace

SuiteReport quadrature_suite(int cases, std::uint64_t seed, double tolerance)
{
    SuiteReport rep;
    rep.suite = "quadrature";
    const int ratios[] = {4, 8, 16};
    for (int k = 0; k < cases; ++k) {
        Rng rng(seed, static_cast<std::uint64_t>(k));
        const double d = ratios[rng.integer(3)];
        const int half = 1 + static_cast<int>(rng.integer(8));
        const std::string tag = "case " + std::to_string(k) + " (D/T=" + std::to_string(static_cast<int>(d)) +
                                ", S=" + std::to_string(half) + ")";
        const double t = rng.uniform(-d, d);

        const auto a = conv_matrix(t, d, half);
        rep.cases.push_back({tag + " A(t)",
                             matrix_error(a.entries, [&](int s1, int s2) { return conv_entry(s1, s2, t, d); }, half),
                             tolerance});
        const auto ap = noise_corr_matrix(t, d, half);
        rep.cases.push_back(
            {tag + " A'(t)",
             matrix_error(ap.entries, [&](int s1, int s2) { return noise_corr_entry(s1, s2, t, d); }, half),
             tolerance});
        const double w = rng.uniform(0.5, 1.5);
        const auto e = inband_matrix(w, d, half);
        rep.cases.push_back(
            {tag + " E", matrix_error(e.entries, [&](int s1, int s2) { return inband_entry(s1, s2, w, d); }, half),
             tolerance});

        const FilterParams tx = make_filter(random_coeffs(half, rng), d, true);
        const FilterParams rx = make_filter(random_coeffs(half, rng), d, false);
        const double rx_energy = rx.coeffs.squaredNorm() / d;
        const double bound = std::sqrt(rx_energy);
        rep.cases.push_back(
            {tag + " cross-correlation",
             std::abs(filter_cross_correlation(tx, rx, t) - cross_correlation(tx, rx, t)) / bound, tolerance});

        MultipathCIR cir;
        const int paths = 1 + static_cast<int>(rng.integer(3));
        double gain_sum = 0.0;
        for (int p = 0; p < paths; ++p) {
            cir.gains.push_back(rng.complex_normal());
            cir.delays.push_back(rng.uniform(0.0, 3.0));
            gain_sum += std::abs(cir.gains.back());
        }
        const auto taps = channel_taps(tx, rx, cir, 1.0);
        const auto ref_taps = oracle::channel_taps(tx, rx, cir, 1.0, taps.first_index, taps.last_index());
        double tap_err = 0.0;
        for (std::size_t i = 0; i < taps.taps.size(); ++i) {
            tap_err = std::max(tap_err, std::abs(taps.taps[i] - ref_taps[i]));
        }
        rep.cases.push_back({tag + " channel taps", tap_err / (gain_sum * bound), tolerance});

        const double n0 = rng.uniform(0.05, 2.0);
        const cplx var0 = oracle::noise_covariance(rx, n0, 1.0, 0);
        double noise_err = 0.0;
        for (int ell = -static_cast<int>(d); ell <= static_cast<int>(d); ++ell) {
            noise_err = std::max(noise_err, std::abs(wavelearn::noise_covariance(rx, n0, 1.0, ell) -
                                                     oracle::noise_covariance(rx, n0, 1.0, ell)));
        }
        rep.cases.push_back({tag + " noise covariance", noise_err / std::abs(var0), tolerance});
    }
    return rep;
}

namespace {

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

Tensor random_tensor(Shape shape, Rng& rng, const std::function<double(double)>& shape_fn = {})
{
    Tensor t(std::move(shape));
    for (auto& v : t.data) {
        v = rng.normal();
        if (shape_fn) {
            v = shape_fn(v);
        }
    }
    return t;
}

// Scalarizes a non-scalar output with fixed random weights.
Var scalarize(Tape& tape, Var out)
{
    if (out.size() == 1) {
        return ad::sum(out);
    }
    Rng wr(0x5CA1A2, out.size());
    Tensor w(out.shape());
    for (auto& v : w.data) {
        v = wr.normal();
    }
    return ad::sum(ad::mul(out, tape.constant(std::move(w))));
}

double grad_error(const std::vector<Tensor>& inputs, const Builder& build)
{
    std::vector<Tensor> analytic;
    {
        Tape tape;
        std::vector<Var> leaves;
        for (const auto& t : inputs) {
            leaves.push_back(tape.leaf(t));
        }
        tape.backward(scalarize(tape, build(tape, leaves)));
        for (const auto& l : leaves) {
            analytic.push_back(tape.grad(l));
        }
    }
    std::vector<Tensor> work = inputs;
    auto eval = [&]() {
        Tape tape;
        std::vector<Var> leaves;
        for (const auto& t : work) {
            leaves.push_back(tape.leaf(t));
        }
        return scalarize(tape, build(tape, leaves)).item();
    };
    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < work.size(); ++i) {
        for (std::size_t j = 0; j < work[i].size(); ++j) {
            const double x = work[i][j];
            const double h = 1e-6 * std::max(1.0, std::abs(x));
            work[i][j] = x + h;
            const double up = eval();
            work[i][j] = x - h;
            const double down = eval();
            work[i][j] = x;
            const double fd = (up - down) / (2.0 * h);
            diff = std::max(diff, std::abs(fd - analytic[i][j]));
            scale = std::max(scale, std::abs(fd));
        }
    }
    return scale > 0.0 ? diff / scale : diff;
}

double away_from_zero(double v)
{
    return v >= 0.0 ? v + 0.1 : v - 0.1;
}

double positive(double v)
{
    return 0.5 + std::abs(v);
}

// End-to-end link for the gradient suite: params flattened in ParamSet order.
struct LinkCheck {
    TrainConfig cfg;
    TrainState state;
    BatchData data;
    InbandMatrix inband;
    TapMatrices taps;

    explicit LinkCheck(std::uint64_t seed)
    {
        cfg.block_length = 16;
        cfg.half_width = 4;
        cfg.duration_symbols = 4;
        cfg.batch_size = 1;
        cfg.papr_batch = 32;
        cfg.eps_aclr = 1e-6;
        cfg.eps_papr = 1.2;
        cfg.receiver.num_blocks = 2;
        cfg.receiver.dilations = {1, 2};
        cfg.seed = seed;
        state = init_state(cfg);
        state.lambda_aclr = {-0.3};
        state.lambda_papr = {-0.2};
        state.eta = 2.0;
        Rng rng(seed, 7);
        const NoiseProjector noise(cfg.duration(), cfg.symbol_period, cfg.half_width);
        data = draw_batch(cfg, noise, 1, rng);
        inband = inband_matrix(cfg.inband_bandwidth, cfg.duration(), cfg.half_width);
        taps = tap_matrices(MultipathCIR::awgn(), cfg.duration(), cfg.half_width, cfg.symbol_period);
    }

    std::vector<Tensor> inputs() const
    {
        std::vector<Tensor> out;
        for (std::size_t i = 0; i < state.params.size(); ++i) {
            out.push_back(state.params.tensor(i));
        }
        return out;
    }

    Builder builder(bool objective) const
    {
        return [this, objective](Tape& tape, const std::vector<Var>& leaves) {
            Bindings vars;
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                vars[state.params.name(i)] = leaves[i];
            }
            const StepGraph g = build_step_graph(tape, vars, cfg, state, data, &taps, inband);
            return objective ? g.objective : g.bce[0];
        };
    }
};

}  // namespace

SuiteReport gradient_suite(std::uint64_t seed, double tolerance)
{
    SuiteReport rep;
    rep.suite = "gradients";
    Rng rng(seed, 0);
    auto rt = [&](Shape s, std::function<double(double)> fn = {}) { return random_tensor(std::move(s), rng, fn); };
    auto add = [&](const std::string& name, std::vector<Tensor> inputs, const Builder& b) {
        rep.cases.push_back({name, grad_error(inputs, b), tolerance});
    };
    auto unary = [&](const std::string& name, Var (*op)(Var), std::function<double(double)> fn = {}) {
        add(name, {rt({3, 4}, fn)}, [op](Tape&, const std::vector<Var>& v) { return op(v[0]); });
    };

    add("add", {rt({3, 4}), rt({3, 4})}, [](Tape&, const auto& v) { return ad::add(v[0], v[1]); });
    add("sub", {rt({3, 4}), rt({3, 4})}, [](Tape&, const auto& v) { return ad::sub(v[0], v[1]); });
    add("mul", {rt({3, 4}), rt({3, 4})}, [](Tape&, const auto& v) { return ad::mul(v[0], v[1]); });
    add("div", {rt({3, 4}), rt({3, 4}, positive)}, [](Tape&, const auto& v) { return ad::div(v[0], v[1]); });
    unary("neg", ad::neg);
    add("scale", {rt({3, 4})}, [](Tape&, const auto& v) { return ad::scale(v[0], 2.5); });
    add("add_scalar", {rt({3, 4})}, [](Tape&, const auto& v) { return ad::add_scalar(v[0], 0.7); });
    add("mul_scalar", {rt({3, 4}), rt({1})}, [](Tape&, const auto& v) { return ad::mul_scalar(v[0], v[1]); });
    unary("square", ad::square);
    unary("sqrt", ad::sqrt, positive);
    unary("exp", ad::exp);
    unary("log", ad::log, positive);
    unary("relu", ad::relu, away_from_zero);
    add("clamp", {rt({3, 4}, [](double x) { return std::abs(std::abs(x) - 0.5) < 0.05 ? x + 0.2 : x; })},
        [](Tape&, const auto& v) { return ad::clamp(v[0], -0.5, 0.5); });
    unary("sigmoid", ad::sigmoid);
    unary("tanh", ad::tanh);
    unary("softplus", ad::softplus);
    unary("sum", ad::sum);
    unary("mean", ad::mean);
    add("sum_axis", {rt({2, 3, 4})}, [](Tape&, const auto& v) { return ad::sum_axis(v[0], 1); });
    add("matmul", {rt({3, 4}), rt({4, 5})}, [](Tape&, const auto& v) { return ad::matmul(v[0], v[1]); });
    add("reshape", {rt({3, 4})}, [](Tape&, const auto& v) { return ad::reshape(v[0], Shape{2, 6}); });
    add("expand axis 0", {rt({3})}, [](Tape&, const auto& v) { return ad::expand(v[0], 0, 4); });
    add("expand axis 1", {rt({3})}, [](Tape&, const auto& v) { return ad::expand(v[0], 1, 4); });
    add("gather", {rt({5})},
        [](Tape&, const auto& v) { return ad::gather(v[0], {0, 4, 4, 2, 1, 0}, Shape{2, 3}); });
    add("concat", {rt({2, 3}), rt({2, 2})}, [](Tape&, const auto& v) { return ad::concat({v[0], v[1]}, 1); });
    add("slice", {rt({3, 5})}, [](Tape&, const auto& v) { return ad::slice(v[0], 1, 1, 4); });
    add("bias_add", {rt({2, 5, 3}), rt({3})}, [](Tape&, const auto& v) { return ad::bias_add(v[0], v[1]); });
    add("conv1d", {rt({2, 7, 3}), rt({3, 3, 4})}, [](Tape&, const auto& v) { return ad::conv1d(v[0], v[1], 2); });
    add("depthwise_conv1d", {rt({2, 7, 3}), rt({3, 3})},
        [](Tape&, const auto& v) { return ad::depthwise_conv1d(v[0], v[1], 2); });
    add("pointwise_conv1d", {rt({2, 7, 3}), rt({3, 4})},
        [](Tape&, const auto& v) { return ad::pointwise_conv1d(v[0], v[1]); });
    add("tap_conv shared", {rt({2, 6}), rt({3})}, [](Tape&, const auto& v) { return ad::tap_conv(v[0], v[1], -1); });
    add("tap_conv per row", {rt({2, 6}), rt({2, 3})},
        [](Tape&, const auto& v) { return ad::tap_conv(v[0], v[1], 1); });

    auto cx = [](const auto& v, std::size_t i) { return ComplexVar{v[i], v[i + 1]}; };
    auto join = [](Tape&, const ComplexVar& c) { return ad::concat({c.re, c.im}, 0); };
    add("complex_mul", {rt({4}), rt({4}), rt({4}), rt({4})},
        [&](Tape& t, const auto& v) { return join(t, ad::complex_mul(cx(v, 0), cx(v, 2))); });
    add("complex_add", {rt({4}), rt({4}), rt({4}), rt({4})},
        [&](Tape& t, const auto& v) { return join(t, ad::complex_add(cx(v, 0), cx(v, 2))); });
    add("complex_conj", {rt({4}), rt({4})}, [&](Tape& t, const auto& v) { return join(t, ad::complex_conj(cx(v, 0))); });
    add("complex_matmul", {rt({2, 3}), rt({2, 3}), rt({3, 2}), rt({3, 2})},
        [&](Tape& t, const auto& v) { return join(t, ad::complex_matmul(cx(v, 0), cx(v, 2))); });
    add("complex_abs2", {rt({4}), rt({4})}, [&](Tape&, const auto& v) { return ad::complex_abs2(cx(v, 0)); });

    const int half = 3;
    const double d = 4.0;
    MultipathCIR cir;
    cir.gains = {cplx(0.8, 0.3), cplx(-0.2, 0.5)};
    cir.delays = {0.3, 1.7};
    const TapMatrices awgn_taps = tap_matrices(MultipathCIR::awgn(), d, half, 1.0);
    const TapMatrices mp_taps = tap_matrices(cir, d, half, 1.0);
    const auto n = static_cast<std::size_t>(2 * half + 1);
    add("filter_taps awgn", {rt({n}), rt({n}), rt({n}), rt({n})},
        [&](Tape& t, const auto& v) { return join(t, ad::filter_taps(cx(v, 0), cx(v, 2), awgn_taps, d)); });
    add("filter_taps multipath", {rt({n}), rt({n}), rt({n}), rt({n})},
        [&](Tape& t, const auto& v) { return join(t, ad::filter_taps(cx(v, 0), cx(v, 2), mp_taps, d)); });
    add("normalize_points", {rt({8}), rt({8})},
        [&](Tape& t, const auto& v) { return join(t, ad::normalize_points(cx(v, 0))); });
    const InbandMatrix e = inband_matrix(1.0, d, half);
    add("aclr", {rt({n}), rt({n})}, [&](Tape&, const auto& v) { return ad::aclr(cx(v, 0), e); });
    Rng prng(seed, 11);
    const PowerSamples samples = PowerSamples::draw(d, 1.0, 4, 20, prng);
    add("instant_power", {rt({n}), rt({n}), rt({4}), rt({4})},
        [&](Tape&, const auto& v) { return ad::instant_power(cx(v, 0), cx(v, 2), samples); });
    Eigen::MatrixXcd y(5, static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        y(i) = prng.complex_normal();
    }
    add("project_noise", {rt({n}), rt({n})},
        [&](Tape& t, const auto& v) { return join(t, ad::project_noise(y, cx(v, 0), d)); });
    add("apply_taps shared", {rt({2, 6}), rt({2, 6}), rt({3}), rt({3})}, [&](Tape& t, const auto& v) {
        const auto r = ad::apply_taps(cx(v, 0), cx(v, 2), -1);
        return ad::concat({r.re, r.im}, 1);
    });
    add("apply_taps per row", {rt({2, 6}), rt({2, 6}), rt({2, 3}), rt({2, 3})}, [&](Tape&, const auto& v) {
        const auto r = ad::apply_taps(cx(v, 0), cx(v, 2), 0);
        return ad::concat({r.re, r.im}, 1);
    });

    Tensor bits(Shape{2, 3, 4});
    for (auto& b : bits.data) {
        b = static_cast<double>(prng.bit());
    }
    add("bce_loss", {rt({2, 3, 4}, [](double x) { return 3.0 * x; })},
        [&](Tape& t, const auto& v) { return bce_loss(v[0], t.constant(bits)); });
    add("sum_log_rate_loss", {Tensor::scalar(2.5), Tensor::scalar(3.2)},
        [](Tape&, const auto& v) { return sum_log_rate_loss(v[0], v[1], 4, 0.5, 1e-3); });
    add("sum_log_rate_loss below floor", {Tensor::scalar(3.9995), Tensor::scalar(3.0)},
        [](Tape&, const auto& v) { return sum_log_rate_loss(v[0], v[1], 4, 0.3, 1e-3); });
    add("augmented_lagrangian", {Tensor::scalar(2.0), Tensor::scalar(0.3), Tensor::scalar(0.05)},
        [](Tape&, const auto& v) { return augmented_lagrangian(v[0], v[1], v[2], -0.5, -0.7, 3.0, 1e-3, 4.0); });

    const LinkCheck link(seed);
    add("end-to-end BCE (16-symbol AWGN link, 2-block receiver)", link.inputs(), link.builder(false));
    add("end-to-end augmented Lagrangian", link.inputs(), link.builder(true));
    return rep;
}

SuiteReport nyquist_suite(double tolerance)
{
    SuiteReport rep;
    rep.suite = "nyquist";
    for (double beta : {0.25, 0.5, 1.0}) {
        RrcParams p;
        p.rolloff_beta = beta;
        p.duration = 32.0;
        const FilterParams tx = WindowedRrc(p, false).project(100);
        const FilterParams rx = matched_receive_filter(tx);
        const cplx peak = filter_cross_correlation(tx, rx, 0.0);
        double worst = 0.0;
        for (int l = -32; l <= 32; ++l) {
            if (l != 0) {
                worst = std::max(worst, std::abs(filter_cross_correlation(tx, rx, l)));
            }
        }
        char name[64];
        std::snprintf(name, sizeof name, "truncated RRC beta=%.2f D=32T S=100", beta);
        rep.cases.push_back({name, worst / std::abs(peak), tolerance});
    }
    return rep;
}

namespace {

template <typename Sampler>
double sampler_error(const FilterParams& rx, double n0, int max_lag, std::size_t trials, std::size_t block,
                     Sampler sample)
{
    std::vector<cplx> acc(static_cast<std::size_t>(max_lag) + 1, 0.0);
    std::size_t count = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::vector<cplx> w = sample(t);
        for (std::size_t m = 0; m + static_cast<std::size_t>(max_lag) < block; m += static_cast<std::size_t>(max_lag) + 1) {
            for (int l = 0; l <= max_lag; ++l) {
                acc[static_cast<std::size_t>(l)] += w[m] * std::conj(w[m + static_cast<std::size_t>(l)]);
            }
            ++count;
        }
    }
    const double var0 = wavelearn::noise_covariance(rx, n0, rx.symbol_period, 0).real();
    double err = 0.0;
    for (int l = 0; l <= max_lag; ++l) {
        const cplx emp = acc[static_cast<std::size_t>(l)] / static_cast<double>(count);
        err = std::max(err, std::abs(emp - wavelearn::noise_covariance(rx, n0, rx.symbol_period, l)));
    }
    return err / var0;
}

}  // namespace

SuiteReport noise_suite(std::uint64_t seed, std::size_t trials)
{
    SuiteReport rep;
    rep.suite = "noise";
    const double tol = 5.0 / std::sqrt(static_cast<double>(trials));
    struct Geometry {
        const char* name;
        int ratio;
        int half;
    };
    for (const Geometry g : {Geometry{"D/T=8 S=12", 8, 12}, Geometry{"D/T=5 S=7", 5, 7}}) {
        Rng rng(seed, static_cast<std::uint64_t>(g.ratio));
        RrcParams p;
        p.rolloff_beta = 0.35;
        p.duration = g.ratio;
        const FilterParams matched = matched_receive_filter(WindowedRrc(p).project(g.half));
        const FilterParams random = make_filter(random_coeffs(g.half, rng), g.ratio, false);
        const double n0 = 0.3;
        const int lags = 3;
        for (const auto& [label, rx] : {std::pair{"matched RRC", matched}, std::pair{"random", random}}) {
            const std::string tag = std::string(g.name) + " " + label;
            Rng r1 = rng.fork(1);
            const auto mc = mc_noise_covariance(rx, n0, 1.0, lags, trials, r1);
            const double var0 = wavelearn::noise_covariance(rx, n0, 1.0, 0).real();
            double err = 0.0;
            for (int l = 0; l <= lags; ++l) {
                err = std::max(err, std::abs(mc[static_cast<std::size_t>(l)] -
                                             wavelearn::noise_covariance(rx, n0, 1.0, l)));
            }
            rep.cases.push_back({tag + " white-noise integral", err / var0, tol});

            const std::size_t block = 4 * (lags + 1);
            const BandedNoiseFactor banded(rx, n0, 1.0, block);
            Rng r2 = rng.fork(2);
            rep.cases.push_back({tag + " banded Cholesky",
                                 sampler_error(rx, n0, lags, trials / 4, block, [&](std::size_t) {
                                     return banded.sample(r2);
                                 }),
                                 tol});

            const NoiseProjector proj(rx.duration, 1.0, g.half);
            Rng r3 = rng.fork(3);
            rep.cases.push_back({tag + " differentiable projection",
                                 sampler_error(rx, n0, lags, trials / 4, block,
                                               [&](std::size_t) {
                                                   const Eigen::MatrixXcd y = proj.sample(block, n0, r3);
                                                   const Eigen::VectorXcd w = y * rx.coeffs.conjugate() / rx.duration;
                                                   return std::vector<cplx>(w.data(), w.data() + w.size());
                                               }),
                                 tol});
        }
    }
    return rep;
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed)
{
    if (name == "quadrature") {
        return quadrature_suite(100, seed);
    }
    if (name == "gradients") {
        return gradient_suite(seed);
    }
    if (name == "nyquist") {
        return nyquist_suite();
    }
    if (name == "noise") {
        return noise_suite(seed);
    }
    throw ConfigError("unknown oracle suite '" + name + "' (quadrature, gradients, nyquist, noise)");
}

}  // namespace wavelearn::oracle
