#pragma once

#include <iosfwd>
#include <string>

#include "wavelearn/config.hpp"

namespace wavelearn {

// Each command writes its outputs under cfg.out_dir and returns a process
// exit status. Diagnostics go to `msg`.
int cmd_train(const RunConfig& cfg, std::ostream& msg);
int cmd_eval(const std::string& checkpoint, const RunConfig& cfg, std::ostream& msg);
int cmd_baseline(const RunConfig& cfg, std::ostream& msg);
int cmd_oracle(const std::string& suite, std::uint64_t seed, const std::string& out_dir, std::ostream& msg);
int cmd_export(const std::string& checkpoint, const RunConfig& cfg, std::ostream& msg);

// Restores the run configuration stored in a checkpoint and checks that
// every tensor has the shape the configuration implies.
RunConfig checkpoint_config(const std::string& checkpoint);
void check_checkpoint_shapes(const ParamSet& params, const TrainConfig& cfg);

int run_cli(int argc, char** argv);

}  // namespace wavelearn
