#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wavelearn/dsp_core.hpp"
#include "wavelearn/trainer.hpp"

namespace wavelearn {

struct SnrGrid {
    double lo_db = 5.0;
    double hi_db = 20.0;
    int points = 13;

    std::vector<double> values() const;
};

// "lo:hi:n"
SnrGrid parse_snr_grid(const std::string& text);

// Everything a command needs. Constraint levels are given in dB in the
// file and held linear here; null or "inf" disables a constraint.
struct RunConfig {
    TrainConfig train;
    double baseline_rolloff = 0.25;
    std::size_t eval_symbols = 100000;
    std::size_t papr_samples = 100000;
    SnrGrid snr_grid;
    std::string out_dir = "out";
    int threads = 0;  // 0 = all cores

    void validate() const;
    std::uint64_t seed() const { return train.seed; }
    int worker_threads() const;
    LinkConfig link() const;
    RrcParams baseline_rrc() const;
};

// Field-level ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Canonical JSON with unit-named fields; parse_run_config inverts it.
std::string run_config_json(const RunConfig& cfg);

// Hash of the canonical JSON without output location and thread count.
std::string config_hash(const RunConfig& cfg);

double db_to_linear(double db);
double linear_to_db(double x);

}  // namespace wavelearn
