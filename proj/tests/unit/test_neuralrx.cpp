#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "wavelearn/errors.hpp"
#include "wavelearn/neuralrx.hpp"

using namespace wavelearn;

namespace {

ReceiverConfig small_config()
{
    ReceiverConfig cfg;
    cfg.num_blocks = 2;
    cfg.channels = 6;
    cfg.dilations = {1, 2};
    return cfg;
}

std::vector<cplx> random_block(std::size_t n, Rng& rng)
{
    std::vector<cplx> r(n);
    for (auto& v : r) {
        v = rng.complex_normal(1.0);
    }
    return r;
}

}  // namespace

TEST_CASE("initial weights lie in the fan-in bound")
{
    Rng rng(1);
    const ReceiverConfig cfg = small_config();
    const ParamSet p = init_receiver(cfg, rng);
    const ad::Tensor& w = p.at("rx.in.w");
    REQUIRE(w.shape == ad::Shape{3, 2, 6});
    const double bound = 1.0 / std::sqrt(6.0);
    for (double v : w.data) {
        CHECK(std::abs(v) <= bound);
    }
    CHECK(p.at("rx.out.w").shape == ad::Shape{3, 6, 4});
}

TEST_CASE("AWGN receiver output shape and locality")
{
    Rng rng(2);
    const ReceiverConfig cfg = small_config();
    const ParamSet p = init_receiver(cfg, rng);
    const std::size_t n = 40;
    auto r = random_block(n, rng);
    const LlrBlock a = neural_llrs_awgn(r, p, cfg);
    CHECK(a.rows == n);
    CHECK(a.bits_per_symbol == 4);

    const int radius = cfg.receptive_radius();
    REQUIRE(radius + 1 < static_cast<int>(n));
    auto far = r;
    far[static_cast<std::size_t>(radius + 1)] += cplx(5.0, -3.0);
    const LlrBlock b = neural_llrs_awgn(far, p, cfg);
    for (int k = 0; k < 4; ++k) {
        CHECK(b(0, k) == a(0, k));
    }
    auto near = r;
    near[static_cast<std::size_t>(radius)] += cplx(5.0, -3.0);
    const LlrBlock c = neural_llrs_awgn(near, p, cfg);
    double diff = 0.0;
    for (int k = 0; k < 4; ++k) {
        diff += std::abs(c(0, k) - a(0, k));
    }
    CHECK(diff > 0.0);
}

TEST_CASE("multipath receiver conditions every output on the pilots")
{
    Rng rng(3);
    ReceiverConfig cfg = small_config();
    cfg.pilot_len = 4;
    cfg.pilot_embed = 5;
    CHECK(cfg.input_channels() == 7);
    const ParamSet p = init_receiver(cfg, rng);
    const std::size_t n = 60;
    auto r = random_block(n, rng);
    const LlrBlock a = neural_llrs_multipath(r, p, cfg);
    r[0] += cplx(1.0, 1.0);
    const LlrBlock b = neural_llrs_multipath(r, p, cfg);
    CHECK(std::abs(a(n - 1, 0) - b(n - 1, 0)) > 0.0);
}

TEST_CASE("checkpoint round trip is exact")
{
    Rng rng(4);
    const ParamSet p = init_receiver(small_config(), rng);
    const auto path = (std::filesystem::temp_directory_path() / "wavelearn_rx_test.manifest.json").string();
    save_checkpoint(path, p, R"({"note":"x"})", "# test");
    std::string meta;
    const ParamSet q = load_checkpoint(path, &meta);
    CHECK(meta.find("note") != std::string::npos);
    REQUIRE(q.size() == p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(q.name(i) == p.name(i));
        CHECK(q.tensor(i).shape == p.tensor(i).shape);
        CHECK(q.tensor(i).data == p.tensor(i).data);
    }
    std::filesystem::remove(path);
}

TEST_CASE("receiver configuration validation")
{
    ReceiverConfig even = small_config();
    even.kernel_size = 4;
    CHECK_THROWS_AS(even.validate(), ConfigError);
    ReceiverConfig mismatch = small_config();
    mismatch.dilations = {1};
    CHECK_THROWS_AS(mismatch.validate(), ConfigError);
    ParamSet p;
    p.add("a", ad::Tensor::scalar(1.0));
    CHECK_THROWS_AS(p.add("a", ad::Tensor::scalar(2.0)), ConfigError);
}
