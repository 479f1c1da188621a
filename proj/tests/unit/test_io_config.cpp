#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "wavelearn/config.hpp"
#include "wavelearn/errors.hpp"
#include "wavelearn/io.hpp"

using namespace wavelearn;

namespace {

std::string tmp(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("wavelearn_io_" + name)).string();
}

std::string first_line(const std::string& path)
{
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    return line;
}

std::string error_of(const std::string& json)
{
    try {
        parse_run_config(json);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("FNV-1a content hash")
{
    CHECK(content_hash("") == "cbf29ce484222325");
    CHECK(content_hash("a") == "af63dc4c8601ec8c");
    CHECK(content_hash("foobar") == "85944171f73967e8");
}

TEST_CASE("provenance line")
{
    CHECK(provenance_line("abc", 7) == std::string("# wavelearn ") + WAVELEARN_VERSION + " config=abc seed=7");
}

TEST_CASE("filter, constellation and curve CSV round trips")
{
    FilterParams f;
    f.coeffs = CVec::Zero(5);
    f.coeffs << cplx(0.1, -0.2), cplx(1.0 / 3.0, 0.0), cplx(-2.5e-17, 1e300), cplx(0.0, 0.0), cplx(4.0, -4.0);
    write_filter_csv(tmp("f.csv"), f, "# p");
    CHECK(first_line(tmp("f.csv")) == "# p");
    const CVec back = read_filter_csv(tmp("f.csv"));
    CHECK((back - f.coeffs).norm() == 0.0);

    const Constellation c = qam_gray(4);
    write_constellation_csv(tmp("c.csv"), c, "# p");
    const Constellation cb = read_constellation_csv(tmp("c.csv"));
    CHECK(cb.points == c.points);
    CHECK(cb.bits_per_symbol == 4);

    CurveSeries s;
    s.x = {1.0, 2.0, 3.0};
    s.y = {0.5, 0.25, 0.125};
    write_curve_csv(tmp("s.csv"), s, "# p");
    const CurveSeries sb = read_curve_csv(tmp("s.csv"));
    CHECK(sb.x == s.x);
    CHECK(sb.y == s.y);

    write_scalar_json(tmp("m.json"), {{"aclr_db", -30.25, "dB", 0, 3}, {"rate", 2.5, "bits/symbol", 1000, 3}}, "# p");
    const auto m = read_scalar_json(tmp("m.json"));
    REQUIRE(m.size() == 2);
    CHECK(m[0].name == "aclr_db");
    CHECK(m[0].value == -30.25);
    CHECK(m[1].num_samples == 1000);
    CHECK(m[1].seed == 3);
}

TEST_CASE("in-band cache is keyed by W D and S")
{
    const auto dir = tmp("cache");
    std::filesystem::remove_all(dir);
    const InbandMatrix a = cached_inband_matrix(dir, 1.0, 8.0, 4);
    const InbandMatrix b = cached_inband_matrix(dir, 0.5, 16.0, 4);
    CHECK((a.entries - inband_matrix(1.0, 8.0, 4).entries).norm() == 0.0);
    CHECK((a.entries * 8.0 - b.entries * 16.0).norm() < 1e-14);
    write_inband_csv(tmp("e.csv"), a, "# p");
    CHECK(read_inband_csv(tmp("e.csv"), 1.0, 8.0, 4).has_value());
    CHECK_FALSE(read_inband_csv(tmp("e.csv"), 1.0, 8.0, 5).has_value());
    CHECK_FALSE(read_inband_csv(tmp("e.csv"), 2.0, 8.0, 4).has_value());
}

TEST_CASE("defaults mirror the full-scale setup")
{
    const RunConfig c = parse_run_config("{}");
    CHECK(c.train.half_width == 100);
    CHECK(c.train.duration_symbols == 32);
    CHECK(c.train.block_length == 1000);
    CHECK(c.train.bits_per_symbol == 4);
    CHECK(c.train.batch_size == 10);
    CHECK(c.train.learning_rate == 1e-3);
    CHECK(c.train.papr_batch == 10000);
    CHECK(c.train.eta0 == 1e-2);
    CHECK(c.train.eta_growth == 1.003);
    CHECK(c.snr_grid.values().size() == 13);
    CHECK(c.snr_grid.values().front() == 5.0);
    CHECK(c.snr_grid.values().back() == 20.0);
}

TEST_CASE("constraint levels are read in dB")
{
    const RunConfig c = parse_run_config(R"({"eps_A_db": -30, "eps_P_db": 6})");
    CHECK(c.train.eps_aclr == doctest::Approx(1e-3));
    CHECK(c.train.eps_papr == doctest::Approx(3.981071705534972));
    const RunConfig u = parse_run_config(R"({"eps_A_db": null, "eps_P_db": "inf"})");
    CHECK(u.train.eps_aclr == kInactive);
    CHECK(u.train.eps_papr == kInactive);
}

TEST_CASE("canonical JSON round trips and hashes ignore output location")
{
    RunConfig c = parse_run_config(R"({"mode": "two_user", "seed": 9, "receiver": {"channels": 16}})");
    const std::string j = run_config_json(c);
    CHECK(run_config_json(parse_run_config(j)) == j);
    RunConfig moved = c;
    moved.out_dir = "elsewhere";
    moved.threads = 3;
    CHECK(config_hash(moved) == config_hash(c));
    RunConfig reseeded = c;
    reseeded.train.seed = 10;
    CHECK(config_hash(reseeded) != config_hash(c));
}

TEST_CASE("field-level configuration errors")
{
    CHECK(error_of(R"({"seeed": 1})").find("seeed") != std::string::npos);
    CHECK(error_of(R"({"batch_size": -1})").find("batch_size") != std::string::npos);
    CHECK(error_of(R"({"learning_rate": "fast"})").find("learning_rate") != std::string::npos);
    CHECK(error_of(R"({"receiver": {"kernel": 3}})").find("receiver.kernel") != std::string::npos);
    CHECK(error_of(R"({"mode": "mimo"})").find("mode") != std::string::npos);
    CHECK(error_of(R"({"duration_symbols": 2.5})").find("duration_symbols") != std::string::npos);
    CHECK_FALSE(error_of("{ not json").empty());
    CHECK_THROWS_AS(load_run_config(tmp("missing.json")), ConfigError);
}

TEST_CASE("SNR grid parsing")
{
    const SnrGrid g = parse_snr_grid("0:10:6");
    CHECK(g.values() == std::vector<double>{0.0, 2.0, 4.0, 6.0, 8.0, 10.0});
    CHECK(parse_snr_grid("7:7:1").values() == std::vector<double>{7.0});
    CHECK_THROWS_AS(parse_snr_grid("0:10"), ConfigError);
    CHECK_THROWS_AS(parse_snr_grid("10:0:3"), ConfigError);
    CHECK_THROWS_AS(parse_snr_grid("a:b:c"), ConfigError);
}
