#include "doctest.h"

#include <cmath>
#include <functional>

#include "wavelearn/ad/link_ops.hpp"
#include "wavelearn/errors.hpp"
#include "wavelearn/linkchan.hpp"
#include "wavelearn/oracle_suites.hpp"
#include "wavelearn/oracles.hpp"

using namespace wavelearn;
using namespace wavelearn::ad;

namespace {

using Builder = std::function<Var(Tape&, Var)>;

Tensor random_tensor(Shape shape, Rng& rng)
{
    Tensor t(std::move(shape));
    for (auto& v : t.data) {
        v = rng.normal();
    }
    return t;
}

double max_rel_grad_error(const Builder& f, const Tensor& x0)
{
    Tape tape;
    const Var x = tape.leaf(x0);
    tape.backward(f(tape, x));
    const Tensor g = tape.grad(x);
    const auto fd = oracle::finite_difference(
        [&](const std::vector<double>& v) {
            Tape t;
            return f(t, t.constant(Tensor(x0.shape, v))).item();
        },
        x0.data);
    double scale = 1e-8;
    for (double v : fd) {
        scale = std::max(scale, std::abs(v));
    }
    double err = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
        err = std::max(err, std::abs(g[i] - fd[i]) / scale);
    }
    return err;
}

}  // namespace

TEST_CASE("elementwise primitives pass finite differences")
{
    Rng rng(1);
    const Tensor x0 = random_tensor({3, 4}, rng);
    Tensor pos = x0;
    for (auto& v : pos.data) {
        v = 0.5 + std::abs(v);
    }
    const std::vector<std::pair<const char*, Builder>> cases{
        {"square", [](Tape&, Var x) { return sum(square(x)); }},
        {"exp", [](Tape&, Var x) { return sum(exp(scale(x, 0.5))); }},
        {"sigmoid", [](Tape&, Var x) { return sum(sigmoid(x)); }},
        {"tanh", [](Tape&, Var x) { return mean(tanh(x)); }},
        {"softplus", [](Tape&, Var x) { return sum(softplus(x)); }},
        {"mul", [](Tape&, Var x) { return sum(mul(x, sigmoid(x))); }},
        {"sum_axis", [](Tape&, Var x) { return sum(square(sum_axis(x, 1))); }},
        {"matmul", [](Tape&, Var x) { return sum(square(matmul(x, reshape(x, Shape{4, 3})))); }},
        {"slice_concat", [](Tape&, Var x) { return sum(square(concat({slice(x, 1, 1, 3), x}, 1))); }},
        {"expand", [](Tape&, Var x) { return sum(mul(expand(x, 0, 2), expand(tanh(x), 0, 2))); }},
    };
    for (const auto& [name, f] : cases) {
        CAPTURE(name);
        CHECK(max_rel_grad_error(f, x0) < 1e-6);
    }
    CHECK(max_rel_grad_error([](Tape&, Var x) { return sum(log(x)); }, pos) < 1e-6);
    CHECK(max_rel_grad_error([](Tape&, Var x) { return sum(sqrt(x)); }, pos) < 1e-6);
    CHECK(max_rel_grad_error([](Tape&, Var x) { return sum(div(x, add_scalar(square(x), 1.0))); }, x0) < 1e-6);
}

TEST_CASE("convolutions match direct sums and their gradients")
{
    Rng rng(2);
    const Tensor x0 = random_tensor({2, 7, 3}, rng);
    const Tensor w0 = random_tensor({3, 3, 2}, rng);
    Tape tape;
    const Var y = conv1d(tape.constant(x0), tape.constant(w0), 2);
    REQUIRE(y.shape() == Shape{2, 7, 2});
    for (std::size_t b = 0; b < 2; ++b) {
        for (int n = 0; n < 7; ++n) {
            for (std::size_t o = 0; o < 2; ++o) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) {
                    const int src = n + (k - 1) * 2;
                    if (src < 0 || src >= 7) {
                        continue;
                    }
                    for (std::size_t c = 0; c < 3; ++c) {
                        acc += x0[(b * 7 + static_cast<std::size_t>(src)) * 3 + c] *
                               w0[(static_cast<std::size_t>(k) * 3 + c) * 2 + o];
                    }
                }
                CHECK(y.value()[(b * 7 + static_cast<std::size_t>(n)) * 2 + o] == doctest::Approx(acc));
            }
        }
    }
    const Tensor dw = random_tensor({3, 3}, rng);
    const Tensor pw = random_tensor({3, 2}, rng);
    CHECK(max_rel_grad_error(
              [&](Tape& t, Var x) {
                  return sum(square(pointwise_conv1d(relu(depthwise_conv1d(x, t.constant(dw), 2)), t.constant(pw))));
              },
              x0) < 1e-6);
    CHECK(max_rel_grad_error([&](Tape& t, Var w) { return sum(square(conv1d(t.constant(x0), w, 1))); }, w0) < 1e-6);
}

TEST_CASE("tap convolution equals the discrete channel")
{
    Rng rng(3);
    std::vector<cplx> s(12);
    for (auto& v : s) {
        v = rng.complex_normal(1.0);
    }
    ChannelRealization h;
    h.first_index = -2;
    for (int i = 0; i < 5; ++i) {
        h.taps.push_back(rng.complex_normal(1.0));
    }
    Tape tape;
    const ComplexVar sv = complex_constant(tape, Eigen::Map<Eigen::VectorXcd>(s.data(), 12));
    const ComplexVar s2{reshape(sv.re, Shape{1, 12}), reshape(sv.im, Shape{1, 12})};
    const ComplexVar hv = complex_constant(tape, Eigen::Map<Eigen::VectorXcd>(h.taps.data(), 5));
    const ComplexVar r = apply_taps(s2, hv, h.first_index);
    const auto ref = apply_channel(s, h);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(std::abs(cplx(r.re.value()[i], r.im.value()[i]) - ref[i]) < 1e-12);
    }
}

TEST_CASE("differentiable ACLR and taps match the closed forms")
{
    Rng rng(4);
    FilterParams tx;
    tx.coeffs = CVec::Zero(9);
    for (Eigen::Index i = 0; i < 9; ++i) {
        tx.coeffs(i) = rng.complex_normal(1.0);
    }
    tx.duration = 4.0;
    tx.normalized = true;
    FilterParams rx = tx;
    rx.normalized = false;
    rx.coeffs = rx.coeffs.reverse().eval();
    const InbandMatrix e = inband_matrix(1.0, 4.0, 4);
    Tape tape;
    const ComplexVar theta = complex_leaf(tape, tx.coeffs);
    const ComplexVar psi = complex_leaf(tape, rx.coeffs);
    CHECK(ad::aclr(theta, e).item() == doctest::Approx(wavelearn::aclr(tx, e)).epsilon(1e-12));
    const TapMatrices b = tap_matrices(MultipathCIR::awgn(), 4.0, 4, 1.0);
    const ComplexVar h = filter_taps(theta, psi, b, 4.0);
    const ChannelRealization ref = channel_taps(tx, rx, MultipathCIR::awgn(), 1.0);
    for (std::size_t i = 0; i < b.matrices.size(); ++i) {
        CHECK(std::abs(cplx(h.re.value()[i], h.im.value()[i]) - ref.tap(b.first_index + static_cast<int>(i))) <
              1e-12);
    }
}

TEST_CASE("tape errors and gradient reset")
{
    Tape tape;
    const Var x = tape.leaf(Tensor::vector({1.0, 2.0}));
    CHECK_THROWS_AS(tape.backward(x), DimensionError);
    CHECK_THROWS_AS(add(x, tape.leaf(Tensor::vector({1.0, 2.0, 3.0}))), DimensionError);
    const Var y = sum(square(x));
    tape.backward(y);
    tape.backward(y);
    CHECK(tape.grad(x)[0] == doctest::Approx(2.0));
    CHECK(tape.grad(x)[1] == doctest::Approx(4.0));
    const Var c = tape.constant(Tensor::vector({3.0}));
    CHECK_FALSE(tape.requires_grad(c));
    CHECK(tape.grad(c)[0] == 0.0);
}

TEST_CASE("relu and clamp adjoints vanish where inactive")
{
    Tape tape;
    const Var x = tape.leaf(Tensor::vector({-1.0, 0.5, 3.0}));
    tape.backward(sum(add(relu(x), clamp(x, -2.0, 1.0))));
    const Tensor g = tape.grad(x);
    CHECK(g[0] == doctest::Approx(1.0));
    CHECK(g[1] == doctest::Approx(2.0));
    CHECK(g[2] == doctest::Approx(1.0));
}

TEST_CASE("full gradient oracle suite")
{
    const auto rep = oracle::gradient_suite(2, 1e-4);
    for (const auto& f : rep.failures()) {
        CAPTURE(f.name);
        CHECK(f.error <= f.tolerance);
    }
    CHECK(rep.passed());
}
