#include "wavelearn/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "wavelearn/errors.hpp"
#include "wavelearn/io.hpp"

namespace wavelearn {

using nlohmann::json;

double db_to_linear(double db)
{
    return std::isinf(db) && db > 0 ? kInactive : std::pow(10.0, db / 10.0);
}

double linear_to_db(double x)
{
    return std::isinf(x) ? x : 10.0 * std::log10(x);
}

std::vector<double> SnrGrid::values() const
{
    std::vector<double> out;
    for (int i = 0; i < points; ++i) {
        out.push_back(points == 1 ? lo_db : lo_db + (hi_db - lo_db) * i / (points - 1));
    }
    return out;
}

SnrGrid parse_snr_grid(const std::string& text)
{
    std::stringstream ss(text);
    std::string a;
    std::string b;
    std::string c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c) || !ss.eof()) {
        throw ConfigError("snr grid: expected lo:hi:n, got '" + text + "'");
    }
    SnrGrid g;
    try {
        g.lo_db = std::stod(a);
        g.hi_db = std::stod(b);
        g.points = std::stoi(c);
    } catch (const std::exception&) {
        throw ConfigError("snr grid: expected lo:hi:n, got '" + text + "'");
    }
    if (g.points < 1 || g.hi_db < g.lo_db) {
        throw ConfigError("snr grid: need n >= 1 and lo <= hi");
    }
    return g;
}

void RunConfig::validate() const
{
    train.validate();
    if (!(baseline_rolloff >= 0.0 && baseline_rolloff <= 1.0)) {
        throw ConfigError("baseline_rolloff: must be in [0, 1]");
    }
    if (eval_symbols < 1 || papr_samples < 1) {
        throw ConfigError("eval_symbols and papr_samples must be positive");
    }
    if (snr_grid.points < 1 || snr_grid.hi_db < snr_grid.lo_db) {
        throw ConfigError("snr_grid_db: need n >= 1 and lo <= hi");
    }
    if (threads < 0) {
        throw ConfigError("threads: must be non-negative");
    }
}

int RunConfig::worker_threads() const
{
    return threads > 0 ? threads : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

LinkConfig RunConfig::link() const
{
    LinkConfig l;
    l.block_length = train.block_length;
    l.bits_per_symbol = train.bits_per_symbol;
    l.symbol_period = train.symbol_period;
    l.n0 = n0_from_snr_db(train.snr_db);
    l.seed = train.seed;
    return l;
}

RrcParams RunConfig::baseline_rrc() const
{
    RrcParams p;
    p.rolloff_beta = baseline_rolloff;
    p.symbol_period = train.symbol_period;
    p.duration = train.duration();
    return p;
}

namespace {

// Reads fields of one JSON object and rejects keys it never asked for.
class Fields {
public:
    Fields(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix))
    {
        if (!j_.is_object()) {
            throw ConfigError(where("") + "expected an object");
        }
    }

    template <typename T>
    void read(const char* key, T& value)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) {
            return;
        }
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!it->is_number()) {
                    throw ConfigError("expected a number");
                }
            } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
                if (!it->is_number_integer() && !it->is_number_unsigned()) {
                    throw ConfigError("expected an integer");
                }
                if constexpr (std::is_unsigned_v<T>) {
                    if (it->is_number_integer() && it->template get<long long>() < 0) {
                        throw ConfigError("expected a non-negative integer");
                    }
                }
            }
            value = it->template get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(where(key) + e.what());
        } catch (const ConfigError& e) {
            throw ConfigError(where(key) + e.what());
        }
    }

    // dB level; null, "inf" or +infinity disable the constraint.
    void read_db(const char* key, double& linear)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) {
            return;
        }
        if (it->is_null() || (it->is_string() && (it->get<std::string>() == "inf" || it->get<std::string>() == "+inf"))) {
            linear = kInactive;
        } else if (it->is_number()) {
            linear = db_to_linear(it->get<double>());
        } else {
            throw ConfigError(where(key) + "expected a number in dB, null or \"inf\"");
        }
    }

    const json* child(const char* key)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const
    {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) {
                throw ConfigError(where(k) + "unknown field");
            }
        }
    }

    std::string where(const std::string& key) const
    {
        return "config field '" + prefix_ + key + "': ";
    }

private:
    const json& j_;
    std::string prefix_;
    std::set<std::string> seen_;
};

json db_or_null(double linear)
{
    return std::isinf(linear) ? json(nullptr) : json(linear_to_db(linear));
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    TrainConfig& t = cfg.train;
    Fields f(j, "");
    std::string mode = to_string(t.mode);
    f.read("mode", mode);
    t.mode = parse_train_mode(mode);
    f.read("seed", t.seed);
    f.read("out_dir", cfg.out_dir);
    f.read("threads", cfg.threads);
    f.read("block_length", t.block_length);
    f.read("bits_per_symbol", t.bits_per_symbol);
    f.read("symbol_period", t.symbol_period);
    f.read("duration_symbols", t.duration_symbols);
    f.read("half_width_S", t.half_width);
    f.read("inband_bandwidth_per_T", t.inband_bandwidth);
    f.read("init_rolloff", t.init_rolloff);
    f.read("batch_size", t.batch_size);
    f.read("papr_batch", t.papr_batch);
    f.read("learning_rate", t.learning_rate);
    f.read_db("eps_A_db", t.eps_aclr);
    f.read_db("eps_P_db", t.eps_papr);
    f.read("eta0", t.eta0);
    f.read("eta_growth", t.eta_growth);
    f.read("inner_steps", t.inner_steps);
    f.read("outer_iterations", t.outer_iterations);
    f.read("snr_db", t.snr_db);
    f.read("snr_min_db", t.snr_min_db);
    f.read("snr_max_db", t.snr_max_db);
    f.read("fairness_w", t.fairness_w);
    f.read("rate_floor", t.rate_floor);
    f.read("checkpoint_every", t.checkpoint_every);
    f.read("baseline_rolloff", cfg.baseline_rolloff);
    f.read("eval_symbols", cfg.eval_symbols);
    f.read("papr_samples", cfg.papr_samples);
    std::string grid;
    f.read("snr_grid_db", grid);
    if (!grid.empty()) {
        cfg.snr_grid = parse_snr_grid(grid);
    }
    if (const json* r = f.child("receiver")) {
        Fields rf(*r, "receiver.");
        ReceiverConfig& rc = t.receiver;
        rf.read("num_blocks", rc.num_blocks);
        rf.read("channels", rc.channels);
        rf.read("kernel_size", rc.kernel_size);
        rf.read("dilations", rc.dilations);
        rf.read("pilot_len", rc.pilot_len);
        rf.read("pilot_embed_dim", rc.pilot_embed);
        rf.finish();
    }
    if (const json* d = f.child("tdl")) {
        Fields df(*d, "tdl.");
        double max_delay = t.tdl.max_delay / t.symbol_period;
        double decay = t.tdl.decay_constant / t.symbol_period;
        df.read("num_paths", t.tdl.num_paths);
        df.read("max_delay_symbols", max_delay);
        df.read("decay_symbols", decay);
        df.read("normalize", t.tdl.normalize);
        df.finish();
        t.tdl.max_delay = max_delay * t.symbol_period;
        t.tdl.decay_constant = decay * t.symbol_period;
    }
    f.finish();
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string run_config_json(const RunConfig& cfg)
{
    const TrainConfig& t = cfg.train;
    json j;
    j["mode"] = to_string(t.mode);
    j["seed"] = t.seed;
    j["out_dir"] = cfg.out_dir;
    j["threads"] = cfg.threads;
    j["block_length"] = t.block_length;
    j["bits_per_symbol"] = t.bits_per_symbol;
    j["symbol_period"] = t.symbol_period;
    j["duration_symbols"] = t.duration_symbols;
    j["half_width_S"] = t.half_width;
    j["inband_bandwidth_per_T"] = t.inband_bandwidth;
    j["init_rolloff"] = t.init_rolloff;
    j["batch_size"] = t.batch_size;
    j["papr_batch"] = t.papr_batch;
    j["learning_rate"] = t.learning_rate;
    j["eps_A_db"] = db_or_null(t.eps_aclr);
    j["eps_P_db"] = db_or_null(t.eps_papr);
    j["eta0"] = t.eta0;
    j["eta_growth"] = t.eta_growth;
    j["inner_steps"] = t.inner_steps;
    j["outer_iterations"] = t.outer_iterations;
    j["snr_db"] = t.snr_db;
    j["snr_min_db"] = t.snr_min_db;
    j["snr_max_db"] = t.snr_max_db;
    j["fairness_w"] = t.fairness_w;
    j["rate_floor"] = t.rate_floor;
    j["checkpoint_every"] = t.checkpoint_every;
    j["baseline_rolloff"] = cfg.baseline_rolloff;
    j["eval_symbols"] = cfg.eval_symbols;
    j["papr_samples"] = cfg.papr_samples;
    std::ostringstream grid;
    grid.precision(17);
    grid << cfg.snr_grid.lo_db << ':' << cfg.snr_grid.hi_db << ':' << cfg.snr_grid.points;
    j["snr_grid_db"] = grid.str();
    j["receiver"] = {{"num_blocks", t.receiver.num_blocks},   {"channels", t.receiver.channels},
                     {"kernel_size", t.receiver.kernel_size}, {"dilations", t.receiver.dilations},
                     {"pilot_len", t.receiver.pilot_len},     {"pilot_embed_dim", t.receiver.pilot_embed}};
    j["tdl"] = {{"num_paths", t.tdl.num_paths},
                {"max_delay_symbols", t.tdl.max_delay / t.symbol_period},
                {"decay_symbols", t.tdl.decay_constant / t.symbol_period},
                {"normalize", t.tdl.normalize}};
    return j.dump(2);
}

std::string config_hash(const RunConfig& cfg)
{
    auto j = json::parse(run_config_json(cfg));
    j.erase("out_dir");
    j.erase("threads");
    return content_hash(j.dump());
}

}  // namespace wavelearn
