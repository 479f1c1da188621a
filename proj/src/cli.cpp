#include "wavelearn/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "wavelearn/errors.hpp"
#include "wavelearn/io.hpp"
#include "wavelearn/oracle_suites.hpp"

namespace wavelearn {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kEvalStream = 0x4556414C;   // "EVAL"
constexpr std::uint64_t kPaprStream = 0x50415052;   // "PAPR"
constexpr std::uint64_t kCcdfStream = 0x43434446;   // "CCDF"
constexpr std::uint64_t kCirStream = 0x43495253;    // "CIRS"
constexpr int kSampleCirs = 10;

std::string provenance_of(const RunConfig& cfg)
{
    return provenance_line(config_hash(cfg), cfg.seed());
}

std::string path_in(const std::string& dir, const std::string& name)
{
    return (fs::path(dir) / name).string();
}

std::string user_suffix(int user)
{
    return user == 0 ? "" : std::to_string(user + 1);
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw Error("cannot write " + path);
    }
    f << text;
}

std::vector<double> ccdf_thresholds_db()
{
    std::vector<double> t;
    for (int i = 0; i <= 120; ++i) {
        t.push_back(0.1 * i);
    }
    return t;
}

std::vector<double> psd_grid(double symbol_period)
{
    std::vector<double> f;
    for (int i = -400; i <= 400; ++i) {
        f.push_back(i * 0.005 / symbol_period);
    }
    return f;
}

std::size_t eval_blocks(const RunConfig& cfg)
{
    const std::size_t n = cfg.train.block_length - cfg.train.data_offset();
    return std::max<std::size_t>(1, (cfg.eval_symbols + n - 1) / n);
}

std::uint64_t snr_seed(const RunConfig& cfg, double snr_db)
{
    return Rng::mix(cfg.seed(), kEvalStream + static_cast<std::uint64_t>(std::llround(snr_db * 1000.0 + 1e6)));
}

// Filter, constellation and pilot CSVs of a trained state.
void write_state_exports(const TrainState& s, const RunConfig& cfg, const std::string& dir, const std::string& prov)
{
    const TrainConfig& tc = cfg.train;
    for (int u = 0; u < tc.num_users(); ++u) {
        write_filter_csv(path_in(dir, "filter_tx" + user_suffix(u) + ".csv"), transmit_filter(s, tc, u), prov);
        write_constellation_csv(path_in(dir, "constellation" + user_suffix(u) + ".csv"), constellation(s, tc, u),
                                prov);
    }
    write_filter_csv(path_in(dir, "filter_rx.csv"), receive_filter(s, tc), prov);
    write_points_csv(path_in(dir, "pilots.csv"), pilot_symbols(s, tc), prov);
}

struct LinkSummary {
    std::vector<double> aclr_db;
    std::vector<double> papr_v;
    std::vector<double> rate;
};

LinkSummary summarize(const TrainState& s, const RunConfig& cfg, const InbandMatrix& inband)
{
    const TrainConfig& tc = cfg.train;
    LinkSummary out;
    Rng rng(cfg.seed(), kPaprStream);
    for (int u = 0; u < tc.num_users(); ++u) {
        const FilterParams tx = transmit_filter(s, tc, u);
        out.aclr_db.push_back(linear_to_db(aclr(tx, inband)));
        const double eps = std::isfinite(tc.eps_papr) ? tc.eps_papr : db_to_linear(6.0);
        out.papr_v.push_back(
            papr_excess_V(tx, constellation(s, tc, u), eps, cfg.papr_samples, tc.block_length, rng));
    }
    out.rate = evaluate_rate(s, tc, tc.snr_db, eval_blocks(cfg), snr_seed(cfg, tc.snr_db), cfg.worker_threads());
    return out;
}

std::vector<ScalarMetric> summary_metrics(const LinkSummary& sum, const RunConfig& cfg)
{
    std::vector<ScalarMetric> m;
    for (std::size_t u = 0; u < sum.aclr_db.size(); ++u) {
        const std::string sfx = user_suffix(static_cast<int>(u));
        m.push_back({"aclr_db" + sfx, sum.aclr_db[u], "dB", 0, cfg.seed()});
        m.push_back({"papr_excess_V" + sfx, sum.papr_v[u], "linear", cfg.papr_samples, cfg.seed()});
        m.push_back({"rate" + sfx, sum.rate[u], "bits/symbol", cfg.eval_symbols, cfg.seed()});
    }
    return m;
}

void write_power_curves(const FilterParams& tx, const Constellation& c, const RunConfig& cfg, const std::string& dir,
                        const std::string& sfx, const std::string& prov, int user)
{
    Rng rng(cfg.seed(), kCcdfStream + static_cast<std::uint64_t>(user));
    CurveSeries ccdf = power_ccdf(tx, c, ccdf_thresholds_db(), cfg.papr_samples, cfg.train.block_length, rng);
    write_curve_csv(path_in(dir, "ccdf" + sfx + ".csv"), ccdf, prov);
    write_curve_csv(path_in(dir, "psd" + sfx + ".csv"), analytic_psd(tx, psd_grid(cfg.train.symbol_period)), prov);
}

}  // namespace

RunConfig checkpoint_config(const std::string& checkpoint)
{
    std::string meta;
    load_checkpoint(checkpoint, &meta);
    const auto j = nlohmann::json::parse(meta);
    if (!j.contains("config")) {
        throw ConfigError("checkpoint " + checkpoint + " carries no configuration; pass --config");
    }
    return parse_run_config(j.at("config").dump());
}

void check_checkpoint_shapes(const ParamSet& params, const TrainConfig& cfg)
{
    const TrainState ref = init_state(cfg);
    for (std::size_t i = 0; i < ref.params.size(); ++i) {
        const std::string& name = ref.params.name(i);
        if (!params.contains(name)) {
            throw DimensionError("checkpoint lacks tensor '" + name + "' required by the configuration");
        }
        const ad::Shape& want = ref.params.tensor(i).shape;
        const ad::Shape& got = params.at(name).shape;
        if (want != got) {
            throw DimensionError("tensor '" + name + "' has shape " + ad::shape_string(got) + " in the checkpoint but " +
                                 ad::shape_string(want) + " in the configuration");
        }
    }
    if (params.size() != ref.params.size()) {
        throw DimensionError("checkpoint holds " + std::to_string(params.size()) + " tensors, configuration expects " +
                             std::to_string(ref.params.size()));
    }
}

int cmd_train(const RunConfig& cfg, std::ostream& msg)
{
    cfg.validate();
    const std::string dir = cfg.out_dir;
    fs::create_directories(dir);
    const std::string prov = provenance_of(cfg);
    const std::string cfg_json = run_config_json(cfg);
    write_text(path_in(dir, "config.json"), cfg_json);

    std::ofstream log(path_in(dir, "metrics.jsonl"), std::ios::binary);
    if (!log) {
        throw Error("cannot write " + path_in(dir, "metrics.jsonl"));
    }
    log << nlohmann::json{{"provenance", prov}}.dump() << '\n';

    Trainer trainer(cfg.train);
    TrainOutputs out;
    out.log = &log;
    out.checkpoint_path = path_in(dir, "checkpoint.manifest.json");
    out.provenance = prov;
    out.config_json = cfg_json;
    out.on_outer = [&](const TrainState& s) {
        msg << "outer " << s.outer << "/" << cfg.train.outer_iterations << " eta=" << s.eta << '\n';
    };
    trainer.run(out);

    write_state_exports(trainer.state(), cfg, dir, prov);
    const LinkSummary sum = summarize(trainer.state(), cfg, trainer.inband());
    write_scalar_json(path_in(dir, "train_summary.json"), summary_metrics(sum, cfg), prov);
    for (std::size_t u = 0; u < sum.rate.size(); ++u) {
        msg << "user " << u + 1 << ": rate=" << sum.rate[u] << " aclr_db=" << sum.aclr_db[u]
            << " V=" << sum.papr_v[u] << '\n';
    }
    return 0;
}

int cmd_eval(const std::string& checkpoint, const RunConfig& cfg, std::ostream& msg)
{
    cfg.validate();
    std::string meta;
    const ParamSet params = load_checkpoint(checkpoint, &meta);
    check_checkpoint_shapes(params, cfg.train);
    const TrainState s = state_from_checkpoint(params, meta);
    const TrainConfig& tc = cfg.train;

    const std::string dir = cfg.out_dir;
    const std::string curves = path_in(dir, "curves");
    fs::create_directories(curves);
    const std::string prov = provenance_of(cfg);

    const int users = tc.num_users();
    std::vector<CurveSeries> rate(static_cast<std::size_t>(users));
    for (double snr : cfg.snr_grid.values()) {
        const auto r = evaluate_rate(s, tc, snr, eval_blocks(cfg), snr_seed(cfg, snr), cfg.worker_threads());
        for (int u = 0; u < users; ++u) {
            auto& c = rate[static_cast<std::size_t>(u)];
            c.kind = CurveSeries::Kind::rate;
            c.x.push_back(snr);
            c.y.push_back(r[static_cast<std::size_t>(u)]);
        }
        msg << "snr " << snr << " dB: rate " << r[0] << '\n';
    }
    for (int u = 0; u < users; ++u) {
        const std::string sfx = u == 0 ? "" : "_user" + std::to_string(u + 1);
        write_curve_csv(path_in(curves, "rate" + sfx + ".csv"), rate[static_cast<std::size_t>(u)], prov);
        write_power_curves(transmit_filter(s, tc, u), constellation(s, tc, u), cfg, curves, sfx, prov, u);
    }

    const InbandMatrix inband = inband_matrix(tc.inband_bandwidth / tc.symbol_period, tc.duration(), tc.half_width);
    const LinkSummary sum = summarize(s, cfg, inband);
    write_scalar_json(path_in(dir, "metrics.json"), summary_metrics(sum, cfg), prov);
    return 0;
}

int cmd_baseline(const RunConfig& cfg, std::ostream& msg)
{
    cfg.validate();
    const TrainConfig& tc = cfg.train;
    const RrcParams rrc = cfg.baseline_rrc();
    rrc.validate();
    const FilterParams tx = WindowedRrc(rrc).project(tc.half_width);
    const FilterParams rx = matched_receive_filter(tx);
    const Constellation c = qam_gray(tc.bits_per_symbol);

    const std::string dir = cfg.out_dir;
    const std::string curves = path_in(dir, "curves");
    fs::create_directories(curves);
    const std::string prov = provenance_of(cfg);

    const std::size_t blocks = std::max<std::size_t>(1, (cfg.eval_symbols + tc.block_length - 1) / tc.block_length);
    CurveSeries rate;
    rate.kind = CurveSeries::Kind::rate;
    for (double snr : cfg.snr_grid.values()) {
        rate.x.push_back(snr);
        rate.y.push_back(
            baseline_rate(tx, rx, c, snr, tc.block_length, blocks, snr_seed(cfg, snr), cfg.worker_threads()));
        msg << "snr " << snr << " dB: rate " << rate.y.back() << '\n';
    }
    write_curve_csv(path_in(curves, "rate.csv"), rate, prov);
    write_power_curves(tx, c, cfg, curves, "", prov, 0);
    write_filter_csv(path_in(dir, "filter_tx.csv"), tx, prov);
    write_filter_csv(path_in(dir, "filter_rx.csv"), rx, prov);
    write_constellation_csv(path_in(dir, "constellation.csv"), c, prov);

    const InbandMatrix inband = inband_matrix(tc.inband_bandwidth / tc.symbol_period, tc.duration(), tc.half_width);
    const double aclr_db = linear_to_db(aclr(tx, inband));
    Rng rng(cfg.seed(), kPaprStream);
    const double eps = std::isfinite(tc.eps_papr) ? tc.eps_papr : db_to_linear(6.0);
    const double v = papr_excess_V(tx, c, eps, cfg.papr_samples, tc.block_length, rng);
    const double r0 = baseline_rate(tx, rx, c, tc.snr_db, tc.block_length, blocks, snr_seed(cfg, tc.snr_db),
                                    cfg.worker_threads());
    write_scalar_json(path_in(dir, "metrics.json"),
                      {{"rolloff_beta", rrc.rolloff_beta, "", 0, cfg.seed()},
                       {"aclr_db", aclr_db, "dB", 0, cfg.seed()},
                       {"papr_excess_V", v, "linear", cfg.papr_samples, cfg.seed()},
                       {"rate", r0, "bits/symbol", blocks * tc.block_length, cfg.seed()}},
                      prov);
    msg << "beta " << rrc.rolloff_beta << ": aclr_db=" << aclr_db << " rate=" << r0 << '\n';
    return 0;
}

int cmd_oracle(const std::string& suite, std::uint64_t seed, const std::string& out_dir, std::ostream& msg)
{
    const oracle::SuiteReport rep = oracle::run_suite(suite, seed);
    msg << suite << ": " << rep.cases.size() << " cases, max error " << rep.max_error() << '\n';
    const auto failed = rep.failures();
    for (const auto& f : failed) {
        msg << "  FAIL " << f.name << ": error " << f.error << " > " << f.tolerance << '\n';
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        nlohmann::json j;
        j["provenance"] = provenance_line(content_hash(suite), seed);
        j["suite"] = suite;
        j["passed"] = rep.passed();
        j["max_error"] = rep.max_error();
        for (const auto& c : rep.cases) {
            j["cases"].push_back({{"name", c.name}, {"error", c.error}, {"tolerance", c.tolerance}});
        }
        write_text(path_in(out_dir, "oracle_" + suite + ".json"), j.dump(2) + "\n");
    }
    return failed.empty() ? 0 : 1;
}

int cmd_export(const std::string& checkpoint, const RunConfig& cfg, std::ostream& msg)
{
    cfg.validate();
    std::string meta;
    const ParamSet params = load_checkpoint(checkpoint, &meta);
    check_checkpoint_shapes(params, cfg.train);
    const TrainState s = state_from_checkpoint(params, meta);
    const TrainConfig& tc = cfg.train;
    const std::string dir = cfg.out_dir;
    fs::create_directories(dir);
    const std::string prov = provenance_of(cfg);

    write_state_exports(s, cfg, dir, prov);
    std::vector<double> times;
    const int per_symbol = WindowedRrc::kSamplesPerSymbol;
    const int half = tc.duration_symbols * per_symbol / 2;
    for (int i = -half; i <= half; ++i) {
        times.push_back(i * tc.symbol_period / per_symbol);
    }
    for (int u = 0; u < tc.num_users(); ++u) {
        write_pulse_csv(path_in(dir, "pulse_tx" + user_suffix(u) + ".csv"), transmit_filter(s, tc, u), times, prov);
    }
    write_pulse_csv(path_in(dir, "pulse_rx.csv"), receive_filter(s, tc), times, prov);

    std::vector<MultipathCIR> cirs;
    if (tc.mode == TrainMode::multipath) {
        Rng rng(cfg.seed(), kCirStream);
        for (int i = 0; i < kSampleCirs; ++i) {
            cirs.push_back(synth_tdl_cir(tc.tdl, rng));
        }
    } else {
        cirs.push_back(MultipathCIR::awgn());
    }
    write_cir_csv(path_in(dir, "cir.csv"), cirs, prov);
    msg << "exported " << checkpoint << " to " << dir << '\n';
    return 0;
}

int run_cli(int argc, char** argv)
{
    CLI::App app{"Learned pulse shaping and constellations for single-carrier links"};
    app.require_subcommand(1);

    std::string config_path;
    std::string checkpoint;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
    std::optional<std::string> snr_grid;
    std::optional<double> beta;
    std::string suite;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Master seed");
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--threads", threads, "Worker threads (0 = all cores)");
        sub->add_option("--snr-grid", snr_grid, "Evaluation SNR grid lo:hi:n in dB");
    };
    CLI::App* train = app.add_subcommand("train", "Train transmitter, constellation and receiver");
    common(train);
    CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint over the SNR grid");
    common(eval);
    eval->add_option("--checkpoint", checkpoint, "checkpoint.manifest.json")->required()->check(CLI::ExistingFile);
    CLI::App* baseline = app.add_subcommand("baseline", "Windowed RRC with Gray QAM");
    common(baseline);
    baseline->add_option("--beta", beta, "Roll-off factor in [0, 1]");
    CLI::App* oracle_cmd = app.add_subcommand("oracle", "Run an oracle suite");
    common(oracle_cmd);
    oracle_cmd->add_option("suite", suite, "quadrature | gradients | nyquist | noise")->required();
    CLI::App* exp = app.add_subcommand("export", "Write filters, pulses, constellations, pilots and CIRs");
    common(exp);
    exp->add_option("--checkpoint", checkpoint, "checkpoint.manifest.json")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) {
            cfg = load_run_config(config_path);
        } else if (!checkpoint.empty()) {
            cfg = checkpoint_config(checkpoint);
        }
        if (seed) {
            cfg.train.seed = *seed;
        }
        if (out_dir) {
            cfg.out_dir = *out_dir;
        }
        if (threads) {
            if (*threads < 0) {
                throw ConfigError("threads: must be >= 0");
            }
            cfg.threads = *threads;
        }
        if (snr_grid) {
            cfg.snr_grid = parse_snr_grid(*snr_grid);
        }
        if (beta) {
            cfg.baseline_rolloff = *beta;
        }
        cfg.validate();

        if (train->parsed()) {
            return cmd_train(cfg, std::cerr);
        }
        if (eval->parsed()) {
            return cmd_eval(checkpoint, cfg, std::cerr);
        }
        if (baseline->parsed()) {
            return cmd_baseline(cfg, std::cerr);
        }
        if (oracle_cmd->parsed()) {
            return cmd_oracle(suite, cfg.seed(), out_dir.value_or(""), std::cout);
        }
        return cmd_export(checkpoint, cfg, std::cerr);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace wavelearn
