#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "wavelearn/cli.hpp"
#include "wavelearn/io.hpp"

using namespace wavelearn;
namespace fs = std::filesystem;

namespace {

fs::path work_dir()
{
    const char* env = std::getenv("WAVELEARN_TEST_TMP");
    const fs::path dir = env != nullptr ? fs::path(env) : fs::temp_directory_path() / "wavelearn_cli_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string first_line(const fs::path& p)
{
    std::ifstream f(p);
    std::string line;
    std::getline(f, line);
    return line;
}

fs::path write_config(const std::string& name, const std::string& mode)
{
    nlohmann::json j = {{"mode", mode},
                        {"seed", 11},
                        {"block_length", 48},
                        {"duration_symbols", 4},
                        {"half_width_S", 6},
                        {"batch_size", 2},
                        {"papr_batch", 200},
                        {"inner_steps", 3},
                        {"outer_iterations", 2},
                        {"eval_symbols", 200},
                        {"papr_samples", 500},
                        {"snr_grid_db", "5:15:3"},
                        {"threads", 1},
                        {"receiver", {{"num_blocks", 1}, {"channels", 6}, {"dilations", {1}}}}};
    if (mode == "multipath") {
        j["receiver"]["pilot_len"] = 4;
        j["receiver"]["pilot_embed_dim"] = 6;
    }
    const fs::path p = work_dir() / name;
    std::ofstream(p) << j.dump(2);
    return p;
}

int cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "wavelearn");
    std::vector<char*> argv;
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

double metric(const fs::path& p, const std::string& name)
{
    for (const auto& m : read_scalar_json(p.string())) {
        if (m.name == name) {
            return m.value;
        }
    }
    FAIL("missing metric " << name);
    return 0.0;
}

}  // namespace

TEST_CASE("train writes a monotone log and identical logs for identical seeds")
{
    const fs::path cfg = write_config("awgn.json", "awgn");
    const fs::path a = work_dir() / "train_a";
    const fs::path b = work_dir() / "train_b";
    REQUIRE(cli({"train", "--config", cfg.string(), "--out", a.string()}) == 0);
    REQUIRE(cli({"train", "--config", cfg.string(), "--out", b.string(), "--threads", "2"}) == 0);
    CHECK(slurp(a / "metrics.jsonl") == slurp(b / "metrics.jsonl"));

    std::ifstream log(a / "metrics.jsonl");
    std::string line;
    std::getline(log, line);
    CHECK(nlohmann::json::parse(line).contains("provenance"));
    long prev = -1;
    int lines = 0;
    while (std::getline(log, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("step").get<long>() == prev + 1);
        CHECK(std::abs(j.at("loss").get<double>() + j.at("rate").get<double>() - 4.0) < 1e-9);
        prev = j.at("step").get<long>();
        ++lines;
    }
    CHECK(lines == 6);
    for (const char* f : {"filter_tx.csv", "filter_rx.csv", "constellation.csv", "pilots.csv",
                          "checkpoint.manifest.json", "checkpoint.bin", "train_summary.json"}) {
        CHECK(fs::exists(a / f));
    }
    CHECK(first_line(a / "filter_tx.csv").rfind("# wavelearn ", 0) == 0);
}

TEST_CASE("two-user training emits per-user exports")
{
    const fs::path cfg = write_config("two.json", "two_user");
    const fs::path out = work_dir() / "train_two";
    REQUIRE(cli({"train", "--config", cfg.string(), "--out", out.string()}) == 0);
    for (const char* f : {"filter_tx.csv", "filter_tx2.csv", "constellation.csv", "constellation2.csv"}) {
        CHECK(fs::exists(out / f));
    }
    CHECK(slurp(out / "filter_tx.csv") != slurp(out / "filter_tx2.csv"));

    const fs::path ev = work_dir() / "eval_two";
    REQUIRE(cli({"eval", "--checkpoint", (out / "checkpoint.manifest.json").string(), "--out", ev.string()}) == 0);
    CHECK(fs::exists(ev / "curves" / "rate_user2.csv"));
    CHECK(metric(ev / "metrics.json", "aclr_db2") == metric(out / "train_summary.json", "aclr_db2"));
}

TEST_CASE("eval reproduces the training summary and writes one row per SNR")
{
    const fs::path cfg = write_config("awgn_eval.json", "awgn");
    const fs::path out = work_dir() / "train_eval";
    REQUIRE(cli({"train", "--config", cfg.string(), "--out", out.string()}) == 0);
    const fs::path ev = work_dir() / "eval";
    const std::string ckpt = (out / "checkpoint.manifest.json").string();
    REQUIRE(cli({"eval", "--checkpoint", ckpt, "--out", ev.string(), "--snr-grid", "0:20:5"}) == 0);
    const CurveSeries rate = read_curve_csv((ev / "curves" / "rate.csv").string());
    CHECK(rate.x == std::vector<double>{0.0, 5.0, 10.0, 15.0, 20.0});
    CHECK(rate.y.size() == 5);
    CHECK(metric(ev / "metrics.json", "aclr_db") == metric(out / "train_summary.json", "aclr_db"));
    CHECK(std::abs(metric(ev / "metrics.json", "rate") - metric(out / "train_summary.json", "rate")) < 0.02);
    for (const char* f : {"ccdf.csv", "psd.csv"}) {
        CHECK(first_line(ev / "curves" / f).rfind("# wavelearn ", 0) == 0);
    }
    const CurveSeries ccdf = read_curve_csv((ev / "curves" / "ccdf.csv").string());
    for (std::size_t i = 1; i < ccdf.y.size(); ++i) {
        CHECK(ccdf.y[i] <= ccdf.y[i - 1]);
    }

    const fs::path ex = work_dir() / "export";
    REQUIRE(cli({"export", "--checkpoint", ckpt, "--out", ex.string()}) == 0);
    for (const char* f : {"filter_tx.csv", "pulse_tx.csv", "pulse_rx.csv", "cir.csv", "constellation.csv"}) {
        CHECK(fs::exists(ex / f));
    }
    CHECK(slurp(ex / "filter_tx.csv") == slurp(out / "filter_tx.csv"));

    const fs::path other = write_config("other_shape.json", "two_user");
    CHECK(cli({"eval", "--checkpoint", ckpt, "--config", other.string(), "--out", (work_dir() / "bad").string()}) !=
          0);
}

TEST_CASE("multipath export writes sample channel realizations")
{
    const fs::path cfg = write_config("mp.json", "multipath");
    const fs::path out = work_dir() / "train_mp";
    REQUIRE(cli({"train", "--config", cfg.string(), "--out", out.string()}) == 0);
    const fs::path ex = work_dir() / "export_mp";
    REQUIRE(cli({"export", "--checkpoint", (out / "checkpoint.manifest.json").string(), "--out", ex.string()}) == 0);
    std::ifstream f(ex / "cir.csv");
    std::string line;
    int rows = 0;
    while (std::getline(f, line)) {
        ++rows;
    }
    CHECK(rows > 10);
    CHECK(fs::file_size(ex / "pilots.csv") > 40);
}

TEST_CASE("baseline and oracle commands")
{
    const fs::path cfg = write_config("base.json", "awgn");
    const fs::path out = work_dir() / "baseline";
    REQUIRE(cli({"baseline", "--config", cfg.string(), "--beta", "0.5", "--out", out.string(), "--snr-grid",
                 "10:10:1"}) == 0);
    CHECK(metric(out / "metrics.json", "rolloff_beta") == 0.5);
    CHECK(read_curve_csv((out / "curves" / "rate.csv").string()).y.size() == 1);
    CHECK(cli({"oracle", "nyquist", "--out", (work_dir() / "oracle").string()}) == 0);
    CHECK(fs::exists(work_dir() / "oracle" / "oracle_nyquist.json"));
    CHECK(cli({"oracle", "bogus"}) != 0);
}

TEST_CASE("invalid inputs exit nonzero")
{
    const fs::path bad = work_dir() / "bad.json";
    std::ofstream(bad) << R"({"block_length": 0})";
    CHECK(cli({"train", "--config", bad.string(), "--out", (work_dir() / "never").string()}) != 0);
    CHECK_FALSE(fs::exists(work_dir() / "never" / "metrics.jsonl"));
    CHECK(cli({"train", "--config", (work_dir() / "absent.json").string()}) != 0);
    CHECK(cli({"eval"}) != 0);
    CHECK(cli({"baseline", "--beta", "1.5"}) != 0);
    CHECK(cli({"train", "--snr-grid", "5:1"}) != 0);
}
