#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "wavelearn/ad/link_ops.hpp"
#include "wavelearn/closed_form.hpp"
#include "wavelearn/linkchan.hpp"
#include "wavelearn/metrics.hpp"
#include "wavelearn/neuralrx.hpp"

namespace wavelearn {

enum class TrainMode { awgn, multipath, two_user };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);

inline constexpr double kInactive = std::numeric_limits<double>::infinity();

struct TrainConfig {
    TrainMode mode = TrainMode::awgn;

    // link geometry
    std::size_t block_length = 1000;
    int bits_per_symbol = 4;
    double symbol_period = 1.0;
    int duration_symbols = 32;  // D / T
    int half_width = 100;       // S
    double inband_bandwidth = 1.0;  // W, in units of 1 / T
    double init_rolloff = 0.25;     // initial filters: windowed RRC projection

    // optimization
    std::size_t batch_size = 10;      // M
    std::size_t papr_batch = 10000;   // M'
    double learning_rate = 1e-3;
    double eps_aclr = 1e-3;           // linear; kInactive disables
    double eps_papr = 3.9810717055349722;  // linear (6 dB); kInactive disables
    double eta0 = 1e-2;
    double eta_growth = 1.003;
    int inner_steps = 100;
    int outer_iterations = 50;
    double snr_db = 10.0;
    double snr_min_db = 5.0;   // multipath mode samples per example
    double snr_max_db = 20.0;
    double fairness_w = 0.5;
    double rate_floor = 1e-3;
    std::uint64_t seed = 0;
    int checkpoint_every = 0;  // outer iterations; 0 = final only

    ReceiverConfig receiver;
    TdlConfig tdl;

    void validate() const;
    double duration() const { return duration_symbols * symbol_period; }
    int num_users() const { return mode == TrainMode::two_user ? 2 : 1; }
    std::size_t data_offset() const { return mode == TrainMode::multipath ? static_cast<std::size_t>(receiver.pilot_len) : 0; }
};

// Names of the trainable link parameters of user u (0-based).
std::string theta_name(int user, const char* part);
std::string points_name(int user, const char* part);
inline const char* kPsiRe = "rx.psi.re";
inline const char* kPsiIm = "rx.psi.im";
inline const char* kPilotRe = "pilot.re";
inline const char* kPilotIm = "pilot.im";

struct AdamState {
    std::vector<ad::Tensor> m;
    std::vector<ad::Tensor> v;
    long step = 0;
};

struct TrainState {
    ParamSet params;
    AdamState adam;
    std::vector<double> lambda_aclr;  // per user, <= 0
    std::vector<double> lambda_papr;  // per user, <= 0
    double eta = 0.0;
    int outer = 0;
    long step = 0;
};

// Fresh parameters and multipliers for a configuration.
TrainState init_state(const TrainConfig& cfg);

// Filter, constellation, pilots of a state as plain types.
FilterParams transmit_filter(const TrainState& s, const TrainConfig& cfg, int user = 0);
FilterParams receive_filter(const TrainState& s, const TrainConfig& cfg);
Constellation constellation(const TrainState& s, const TrainConfig& cfg, int user = 0);
std::vector<cplx> pilot_symbols(const TrainState& s, const TrainConfig& cfg);
ParamSet receiver_params(const TrainState& s);
ReceiverConfig receiver_config(const TrainConfig& cfg);

// All randomness of one training step, drawn up front so the loss is a
// deterministic function of the parameters.
struct BatchData {
    std::size_t batch = 0;
    std::vector<std::vector<std::size_t>> symbols;  // per user, batch x N indices (data positions only used)
    std::vector<Eigen::MatrixXcd> noise;            // per item, N x (2S+1)
    std::vector<MultipathCIR> cirs;                 // per item (single AWGN entry in AWGN modes)
    std::vector<PowerSamples> power_by_user;
};

BatchData draw_batch(const TrainConfig& cfg, const NoiseProjector& noise, std::size_t batch, Rng& rng);

// Mean binary cross-entropy in bits per symbol: -(1/(M N)) sum log2 Q(b | r)
// with Q(1) = sigmoid(clamp(llr, +-30)). llrs and bits share shape [M, N, K].
ad::Var bce_loss(ad::Var llrs, ad::Var bits);

// L - lambda_P V - lambda_A max(ACLR - eps_A, 0) + eta/2 (V^2 + max(ACLR - eps_A, 0)^2)
ad::Var augmented_lagrangian(ad::Var loss, ad::Var v, ad::Var aclr_val, double lambda_a, double lambda_p, double eta,
                             double eps_a, double eps_p);

// -(w log2 R1 + (1 - w) log2 R2), R_i = K - L_i; below `floor` the
// logarithm continues linearly so the gradient never vanishes.
ad::Var sum_log_rate_loss(ad::Var l1, ad::Var l2, int bits_per_symbol, double w, double floor = 1e-3);

// lambda_A -= eta max(ACLR - eps_A, 0); lambda_P -= eta V; eta = eta0 growth^u after u updates.
void update_multipliers(TrainState& s, const TrainConfig& cfg, const std::vector<double>& aclr_vals,
                        const std::vector<double>& v_vals);

// Bias-corrected Adam with (0.9, 0.999, 1e-8).
void adam_step(ParamSet& params, const std::vector<ad::Tensor>& grads, AdamState& st, double lr);

// Tape graph of one step: per-user BCE, V, ACLR and the total objective.
struct StepGraph {
    std::vector<ad::Var> bce;    // per user
    std::vector<ad::Var> v;      // per user
    std::vector<ad::Var> aclr;   // per user
    ad::Var objective;           // augmented Lagrangian (or sum-log variant)
    ad::Var llrs;                // [M, N, outputs]
    ad::Var bits;                // [M, N, outputs] as 0/1
};

StepGraph build_step_graph(ad::Tape& tape, const Bindings& vars, const TrainConfig& cfg, const TrainState& state,
                           const BatchData& data, const TapMatrices* awgn_taps, const InbandMatrix& inband);

struct StepLog {
    long step = 0;
    int outer = 0;
    double loss = 0.0;   // per-user BCE (user 0)
    double rate = 0.0;   // bmd_rate_estimate on the same LLRs (user 0)
    double aclr_db = 0.0;
    double v = 0.0;
    double lambda_a = 0.0;
    double lambda_p = 0.0;
    double eta = 0.0;
    double objective = 0.0;
    std::vector<double> user_loss;
    std::vector<double> user_rate;
    std::vector<double> user_aclr_db;
    std::vector<double> user_v;
};

std::string to_json_line(const StepLog& log);

struct TrainOutputs {
    std::ostream* log = nullptr;            // JSON lines
    std::string checkpoint_path;            // manifest path; empty = none
    std::string provenance;
    std::string config_json;                // stored in checkpoint metadata
    std::function<void(const StepLog&)> on_step;
    std::function<void(const TrainState&)> on_outer;
};

class Trainer {
public:
    explicit Trainer(TrainConfig cfg);
    Trainer(TrainConfig cfg, TrainState state);

    const TrainConfig& config() const { return cfg_; }
    const TrainState& state() const { return state_; }
    TrainState& state() { return state_; }
    const InbandMatrix& inband() const { return inband_; }

    StepLog step();
    void finish_outer();
    void run(const TrainOutputs& out);

    void save(const std::string& manifest_path, const std::string& provenance,
              const std::string& config_json = "") const;

private:
    TrainConfig cfg_;
    TrainState state_;
    InbandMatrix inband_;
    NoiseProjector noise_;
    TapMatrices awgn_taps_;
    Rng rng_;
};

TrainState train(const TrainConfig& cfg, const TrainOutputs& out = {});

std::string state_meta_json(const TrainState& s, const TrainConfig& cfg, const std::string& config_json = "");
TrainState state_from_checkpoint(const ParamSet& params, const std::string& meta_json);

// Monte Carlo BMD rate of a trained state at one SNR over `num_blocks`
// fresh blocks, using the banded-Cholesky noise path. Per user.
std::vector<double> evaluate_rate(const TrainState& s, const TrainConfig& cfg, double snr_db, std::size_t num_blocks,
                                  std::uint64_t seed, int threads = 1);

}  // namespace wavelearn
