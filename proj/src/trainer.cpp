#include "wavelearn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "json.hpp"

#include "wavelearn/errors.hpp"

namespace wavelearn {

using ad::ComplexVar;
using ad::Shape;
using ad::Tensor;
using ad::Var;

std::string to_string(TrainMode mode)
{
    switch (mode) {
    case TrainMode::awgn:
        return "awgn";
    case TrainMode::multipath:
        return "multipath";
    case TrainMode::two_user:
        return "two_user";
    }
    return "awgn";
}

TrainMode parse_train_mode(const std::string& name)
{
    if (name == "awgn") {
        return TrainMode::awgn;
    }
    if (name == "multipath") {
        return TrainMode::multipath;
    }
    if (name == "two_user") {
        return TrainMode::two_user;
    }
    throw ConfigError("mode: expected awgn, multipath or two_user, got '" + name + "'");
}

void TrainConfig::validate() const
{
    if (block_length < 1) {
        throw ConfigError("block_length: must be at least 1");
    }
    if (bits_per_symbol < 1 || bits_per_symbol > 16) {
        throw ConfigError("bits_per_symbol: must be in [1, 16]");
    }
    if (!(symbol_period > 0.0)) {
        throw ConfigError("symbol_period: must be positive");
    }
    if (duration_symbols < 1) {
        throw ConfigError("duration_symbols: must be at least 1");
    }
    if (half_width < 0) {
        throw ConfigError("half_width: must be non-negative");
    }
    if (!(inband_bandwidth > 0.0)) {
        throw ConfigError("inband_bandwidth: must be positive");
    }
    if (!(init_rolloff >= 0.0 && init_rolloff <= 1.0)) {
        throw ConfigError("init_rolloff: must be in [0, 1]");
    }
    if (batch_size < 1) {
        throw ConfigError("batch_size: must be at least 1");
    }
    if (!(learning_rate > 0.0)) {
        throw ConfigError("learning_rate: must be positive");
    }
    if (!(eps_aclr > 0.0)) {
        throw ConfigError("eps_aclr: must be positive");
    }
    if (!(eps_papr > 1.0)) {
        throw ConfigError("eps_papr: must exceed 1 (0 dB)");
    }
    if (!(eta0 > 0.0)) {
        throw ConfigError("eta0: must be positive");
    }
    if (!(eta_growth > 1.0)) {
        throw ConfigError("eta_growth: must exceed 1");
    }
    if (inner_steps < 1 || outer_iterations < 0) {
        throw ConfigError("inner_steps must be positive and outer_iterations non-negative");
    }
    if (!(snr_min_db <= snr_max_db)) {
        throw ConfigError("snr range: lower bound exceeds upper bound");
    }
    if (mode == TrainMode::two_user && !(fairness_w > 0.0 && fairness_w < 1.0)) {
        throw ConfigError("fairness_w: must lie in (0, 1)");
    }
    if (!(rate_floor > 0.0)) {
        throw ConfigError("rate_floor: must be positive");
    }
    if (mode == TrainMode::multipath) {
        if (receiver.pilot_len < 1 || static_cast<std::size_t>(receiver.pilot_len) >= block_length) {
            throw ConfigError("pilot_len: multipath mode needs 0 < N_P < N");
        }
        tdl.validate();
    }
    receiver_config(*this).validate();
}

std::string theta_name(int user, const char* part)
{
    return (user == 0 ? std::string("tx.theta.") : "tx" + std::to_string(user + 1) + ".theta.") + part;
}

std::string points_name(int user, const char* part)
{
    return (user == 0 ? std::string("const.") : "const" + std::to_string(user + 1) + ".") + part;
}

ReceiverConfig receiver_config(const TrainConfig& cfg)
{
    ReceiverConfig r = cfg.receiver;
    r.outputs = cfg.bits_per_symbol * cfg.num_users();
    if (cfg.mode != TrainMode::multipath) {
        r.pilot_len = 0;
    }
    return r;
}

namespace {

Tensor real_tensor(const Eigen::VectorXcd& v)
{
    Tensor t(Shape{static_cast<std::size_t>(v.size())});
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        t[static_cast<std::size_t>(i)] = v(i).real();
    }
    return t;
}

Tensor imag_tensor(const Eigen::VectorXcd& v)
{
    Tensor t(Shape{static_cast<std::size_t>(v.size())});
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        t[static_cast<std::size_t>(i)] = v(i).imag();
    }
    return t;
}

Eigen::VectorXcd joined(const ParamSet& p, const std::string& re, const std::string& im)
{
    const Tensor& a = p.at(re);
    const Tensor& b = p.at(im);
    Eigen::VectorXcd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = cplx(a[i], b[i]);
    }
    return v;
}

// Pilots scaled to unit average energy.
std::vector<cplx> normalized(const Eigen::VectorXcd& raw)
{
    std::vector<cplx> pts(raw.data(), raw.data() + raw.size());
    double energy = 0.0;
    for (const auto& p : pts) {
        energy += std::norm(p);
    }
    if (!(energy > 0.0)) {
        throw ZeroVarianceError("pilot symbols coincide");
    }
    const double k = 1.0 / std::sqrt(energy / static_cast<double>(pts.size()));
    for (auto& p : pts) {
        p *= k;
    }
    return pts;
}

ComplexVar unit_energy(const ComplexVar& raw)
{
    Var energy = ad::mean(ad::complex_abs2(raw));
    Var inv = ad::div(raw.re.tape()->constant(Tensor::scalar(1.0)), ad::sqrt(energy));
    return {ad::mul_scalar(raw.re, inv), ad::mul_scalar(raw.im, inv)};
}

}  // namespace

TrainState init_state(const TrainConfig& cfg)
{
    cfg.validate();
    Rng rng(cfg.seed, 0x494E4954);  // "INIT"
    TrainState s;
    RrcParams rp;
    rp.rolloff_beta = cfg.init_rolloff;
    rp.symbol_period = cfg.symbol_period;
    rp.duration = cfg.duration();
    const FilterParams tx = WindowedRrc(rp).project(cfg.half_width);
    const FilterParams rx = matched_receive_filter(tx);

    const Constellation qam = cfg.bits_per_symbol % 2 == 0 && cfg.bits_per_symbol <= 6
                                  ? qam_gray(cfg.bits_per_symbol)
                                  : Constellation{};
    for (int u = 0; u < cfg.num_users(); ++u) {
        s.params.add(theta_name(u, "re"), real_tensor(tx.coeffs));
        s.params.add(theta_name(u, "im"), imag_tensor(tx.coeffs));
    }
    s.params.add(kPsiRe, real_tensor(rx.coeffs));
    s.params.add(kPsiIm, imag_tensor(rx.coeffs));
    const std::size_t npts = std::size_t{1} << cfg.bits_per_symbol;
    std::vector<cplx> base(npts);
    for (std::size_t i = 0; i < npts; ++i) {
        base[i] = qam.size() == npts ? qam.points[i]
                                     : std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(i) / npts);
    }
    for (int u = 0; u < cfg.num_users(); ++u) {
        Eigen::VectorXcd pts(static_cast<Eigen::Index>(npts));
        // Later users start from a rotated copy so superimposed points stay distinct.
        const cplx rot = std::polar(1.0, u * std::numbers::pi / 4.0);
        for (std::size_t i = 0; i < npts; ++i) {
            pts(static_cast<Eigen::Index>(i)) = base[i] * rot;
        }
        s.params.add(points_name(u, "re"), real_tensor(pts));
        s.params.add(points_name(u, "im"), imag_tensor(pts));
    }
    if (cfg.mode == TrainMode::multipath) {
        Rng prng = rng.fork(1);
        Eigen::VectorXcd pil(cfg.receiver.pilot_len);
        for (int i = 0; i < cfg.receiver.pilot_len; ++i) {
            pil(i) = base[prng.integer(base.size())];
        }
        s.params.add(kPilotRe, real_tensor(pil));
        s.params.add(kPilotIm, imag_tensor(pil));
    }
    Rng rrng = rng.fork(2);
    const ParamSet rxp = init_receiver(receiver_config(cfg), rrng);
    for (std::size_t i = 0; i < rxp.size(); ++i) {
        s.params.add(rxp.name(i), rxp.tensor(i));
    }
    for (std::size_t i = 0; i < s.params.size(); ++i) {
        s.adam.m.emplace_back(s.params.tensor(i).shape, 0.0);
        s.adam.v.emplace_back(s.params.tensor(i).shape, 0.0);
    }
    s.lambda_aclr.assign(static_cast<std::size_t>(cfg.num_users()), 0.0);
    s.lambda_papr.assign(static_cast<std::size_t>(cfg.num_users()), 0.0);
    s.eta = cfg.eta0;
    return s;
}

FilterParams transmit_filter(const TrainState& s, const TrainConfig& cfg, int user)
{
    FilterParams f;
    f.coeffs = joined(s.params, theta_name(user, "re"), theta_name(user, "im"));
    f.duration = cfg.duration();
    f.symbol_period = cfg.symbol_period;
    f.normalized = true;
    return f;
}

FilterParams receive_filter(const TrainState& s, const TrainConfig& cfg)
{
    FilterParams f;
    f.coeffs = joined(s.params, kPsiRe, kPsiIm);
    f.duration = cfg.duration();
    f.symbol_period = cfg.symbol_period;
    f.normalized = false;
    return f;
}

Constellation constellation(const TrainState& s, const TrainConfig& cfg, int user)
{
    RawConstellation raw;
    const auto v = joined(s.params, points_name(user, "re"), points_name(user, "im"));
    raw.points.assign(v.data(), v.data() + v.size());
    raw.bits_per_symbol = cfg.bits_per_symbol;
    return normalize_constellation(raw);
}

std::vector<cplx> pilot_symbols(const TrainState& s, const TrainConfig& cfg)
{
    if (cfg.mode != TrainMode::multipath) {
        return {};
    }
    return normalized(joined(s.params, kPilotRe, kPilotIm));
}

ParamSet receiver_params(const TrainState& s)
{
    ParamSet out;
    for (std::size_t i = 0; i < s.params.size(); ++i) {
        if (s.params.name(i).rfind("rx.", 0) == 0 && s.params.name(i).rfind("rx.psi", 0) != 0) {
            out.add(s.params.name(i), s.params.tensor(i));
        }
    }
    return out;
}

BatchData draw_batch(const TrainConfig& cfg, const NoiseProjector& noise, std::size_t batch, Rng& rng)
{
    BatchData d;
    d.batch = batch;
    const std::size_t n = cfg.block_length;
    const std::size_t npts = std::size_t{1} << cfg.bits_per_symbol;
    d.symbols.assign(static_cast<std::size_t>(cfg.num_users()), std::vector<std::size_t>(batch * n));
    for (auto& per_user : d.symbols) {
        for (auto& idx : per_user) {
            idx = rng.integer(npts);
        }
    }
    for (std::size_t b = 0; b < batch; ++b) {
        double snr_db = cfg.snr_db;
        if (cfg.mode == TrainMode::multipath) {
            snr_db = rng.uniform(cfg.snr_min_db, cfg.snr_max_db);
            d.cirs.push_back(synth_tdl_cir(cfg.tdl, rng));
        }
        d.noise.push_back(noise.sample(n, n0_from_snr_db(snr_db), rng));
    }
    if (cfg.mode != TrainMode::multipath) {
        d.cirs.push_back(MultipathCIR::awgn());
    }
    if (std::isfinite(cfg.eps_papr)) {
        for (int u = 0; u < cfg.num_users(); ++u) {
            d.power_by_user.push_back(
                PowerSamples::draw(cfg.duration(), cfg.symbol_period, npts, cfg.papr_batch, rng));
        }
    }
    return d;
}

Var bce_loss(Var llrs, Var bits)
{
    if (llrs.shape() != bits.shape() || llrs.shape().empty()) {
        throw DimensionError("bce_loss: LLR shape " + ad::shape_string(llrs.shape()) + " vs bit shape " +
                             ad::shape_string(bits.shape()));
    }
    const double symbols = static_cast<double>(llrs.size() / llrs.shape().back());
    Var l = ad::clamp(llrs, -kLlrCap, kLlrCap);
    Var per_bit = ad::sub(ad::softplus(l), ad::mul(bits, l));
    return ad::scale(ad::sum(per_bit), 1.0 / (symbols * std::numbers::ln2));
}

namespace {
Var penalty(Var v, Var aclr_val, double lambda_a, double lambda_p, double eta, double eps_a)
{
    Var viol = ad::relu(ad::add_scalar(aclr_val, -eps_a));
    Var lin = ad::add(ad::scale(v, -lambda_p), ad::scale(viol, -lambda_a));
    Var quad = ad::scale(ad::add(ad::square(v), ad::square(viol)), eta / 2.0);
    return ad::add(lin, quad);
}
}  // namespace

Var augmented_lagrangian(Var loss, Var v, Var aclr_val, double lambda_a, double lambda_p, double eta, double eps_a,
                         double /*eps_p*/)
{
    return ad::add(loss, penalty(v, aclr_val, lambda_a, lambda_p, eta, eps_a));
}

Var sum_log_rate_loss(Var l1, Var l2, int bits_per_symbol, double w, double floor)
{
    auto guarded_log2 = [&](Var loss) {
        Var rate = ad::add_scalar(ad::neg(loss), bits_per_symbol);
        Var above = ad::scale(ad::log(ad::add_scalar(ad::relu(ad::add_scalar(rate, -floor)), floor)),
                              1.0 / std::numbers::ln2);
        Var below = ad::relu(ad::add_scalar(ad::neg(rate), floor));
        return ad::sub(above, ad::scale(below, 1.0 / (floor * std::numbers::ln2)));
    };
    return ad::neg(ad::add(ad::scale(guarded_log2(l1), w), ad::scale(guarded_log2(l2), 1.0 - w)));
}

void update_multipliers(TrainState& s, const TrainConfig& cfg, const std::vector<double>& aclr_vals,
                        const std::vector<double>& v_vals)
{
    for (std::size_t u = 0; u < s.lambda_aclr.size(); ++u) {
        s.lambda_aclr[u] -= s.eta * std::max(aclr_vals.at(u) - cfg.eps_aclr, 0.0);
        s.lambda_papr[u] -= s.eta * v_vals.at(u);
    }
    ++s.outer;
    s.eta = cfg.eta0 * std::pow(cfg.eta_growth, s.outer);
}

void adam_step(ParamSet& params, const std::vector<Tensor>& grads, AdamState& st, double lr)
{
    constexpr double b1 = 0.9;
    constexpr double b2 = 0.999;
    constexpr double eps = 1e-8;
    if (grads.size() != params.size() || st.m.size() != params.size() || st.v.size() != params.size()) {
        throw DimensionError("adam_step: parameter, gradient and moment counts differ");
    }
    ++st.step;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params.tensor(i);
        const Tensor& g = grads[i];
        if (g.size() != p.size()) {
            throw DimensionError("adam_step: gradient size mismatch for " + params.name(i));
        }
        for (std::size_t j = 0; j < p.size(); ++j) {
            st.m[i][j] = b1 * st.m[i][j] + (1.0 - b1) * g[j];
            st.v[i][j] = b2 * st.v[i][j] + (1.0 - b2) * g[j] * g[j];
            p[j] -= lr * (st.m[i][j] / c1) / (std::sqrt(st.v[i][j] / c2) + eps);
        }
    }
}

StepGraph build_step_graph(ad::Tape& tape, const Bindings& vars, const TrainConfig& cfg, const TrainState& state,
                           const BatchData& data, const TapMatrices* awgn_taps, const InbandMatrix& inband)
{
    const std::size_t m = data.batch;
    const std::size_t n = cfg.block_length;
    const std::size_t off = cfg.data_offset();
    const int k = cfg.bits_per_symbol;
    const int users = cfg.num_users();
    const double d = cfg.duration();
    auto var = [&](const std::string& name) {
        const auto it = vars.find(name);
        if (it == vars.end()) {
            throw ConfigError("parameter " + name + " is not bound");
        }
        return it->second;
    };
    const ComplexVar psi{var(kPsiRe), var(kPsiIm)};

    std::vector<ComplexVar> thetas;
    std::vector<ComplexVar> points;
    ComplexVar received{};
    for (int u = 0; u < users; ++u) {
        thetas.push_back({var(theta_name(u, "re")), var(theta_name(u, "im"))});
        points.push_back(ad::normalize_points({var(points_name(u, "re")), var(points_name(u, "im"))}));

        std::vector<std::size_t> idx;
        idx.reserve(m * (n - off));
        for (std::size_t b = 0; b < m; ++b) {
            for (std::size_t i = off; i < n; ++i) {
                idx.push_back(data.symbols[static_cast<std::size_t>(u)][b * n + i]);
            }
        }
        ComplexVar s{ad::gather(points.back().re, idx, Shape{m, n - off}),
                     ad::gather(points.back().im, idx, Shape{m, n - off})};
        if (off > 0) {
            const ComplexVar pil = unit_energy({var(kPilotRe), var(kPilotIm)});
            s = {ad::concat({ad::expand(pil.re, 0, m), s.re}, 1), ad::concat({ad::expand(pil.im, 0, m), s.im}, 1)};
        }

        ComplexVar r;
        if (data.cirs.size() == 1 && awgn_taps != nullptr) {
            const ComplexVar h = ad::filter_taps(thetas.back(), psi, *awgn_taps, d);
            r = ad::apply_taps(s, h, awgn_taps->first_index);
        } else {
            int lo = 0;
            int hi = 0;
            for (std::size_t b = 0; b < data.cirs.size(); ++b) {
                const auto [a, z] = tap_range(data.cirs[b], d, cfg.symbol_period);
                lo = b == 0 ? a : std::min(lo, a);
                hi = b == 0 ? z : std::max(hi, z);
            }
            std::vector<Var> hre;
            std::vector<Var> him;
            for (std::size_t b = 0; b < m; ++b) {
                const MultipathCIR& cir = data.cirs[data.cirs.size() == 1 ? 0 : b];
                const auto tm = tap_matrices(cir, d, cfg.half_width, cfg.symbol_period, lo, hi);
                const ComplexVar h = ad::filter_taps(thetas.back(), psi, tm, d);
                hre.push_back(h.re);
                him.push_back(h.im);
            }
            const auto taps = static_cast<std::size_t>(hi - lo + 1);
            const ComplexVar h{ad::reshape(ad::concat(hre, 0), Shape{m, taps}),
                               ad::reshape(ad::concat(him, 0), Shape{m, taps})};
            r = ad::apply_taps(s, h, lo);
        }
        received = u == 0 ? r : ad::complex_add(received, r);
    }

    const auto ns = static_cast<Eigen::Index>(2 * cfg.half_width + 1);
    Eigen::MatrixXcd y(static_cast<Eigen::Index>(m * n), ns);
    for (std::size_t b = 0; b < m; ++b) {
        y.middleRows(static_cast<Eigen::Index>(b * n), static_cast<Eigen::Index>(n)) = data.noise[b];
    }
    const ComplexVar w = ad::project_noise(y, psi, d);
    received = {ad::add(received.re, ad::reshape(w.re, Shape{m, n})),
                ad::add(received.im, ad::reshape(w.im, Shape{m, n}))};

    StepGraph g;
    g.llrs = receiver_forward(received, vars, receiver_config(cfg));
    const auto outputs = static_cast<std::size_t>(k * users);
    Tensor bits(Shape{m, n, outputs});
    for (int u = 0; u < users; ++u) {
        for (std::size_t b = 0; b < m; ++b) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t sym = data.symbols[static_cast<std::size_t>(u)][b * n + i];
                for (int j = 0; j < k; ++j) {
                    bits.data[(b * n + i) * outputs + static_cast<std::size_t>(u * k + j)] =
                        static_cast<double>((sym >> (k - 1 - j)) & 1U);
                }
            }
        }
    }
    g.bits = tape.constant(std::move(bits));

    const double pbar = average_power(n, cfg.symbol_period, d);
    for (int u = 0; u < users; ++u) {
        const auto lo = static_cast<std::size_t>(u * k);
        const auto hi = static_cast<std::size_t>((u + 1) * k);
        Var lu = ad::slice(ad::slice(g.llrs, 2, lo, hi), 1, off, n);
        Var bu = ad::slice(ad::slice(g.bits, 2, lo, hi), 1, off, n);
        g.bce.push_back(bce_loss(lu, bu));
        g.aclr.push_back(ad::aclr(thetas[static_cast<std::size_t>(u)], inband));
        if (data.power_by_user.empty()) {
            g.v.push_back(tape.constant(Tensor::scalar(0.0)));
        } else {
            Var p = ad::instant_power(thetas[static_cast<std::size_t>(u)], points[static_cast<std::size_t>(u)],
                                      data.power_by_user[static_cast<std::size_t>(u)]);
            g.v.push_back(ad::mean(ad::relu(ad::add_scalar(ad::scale(p, 1.0 / pbar), -cfg.eps_papr))));
        }
    }

    if (users == 1) {
        g.objective = augmented_lagrangian(g.bce[0], g.v[0], g.aclr[0], state.lambda_aclr[0], state.lambda_papr[0],
                                           state.eta, cfg.eps_aclr, cfg.eps_papr);
    } else {
        g.objective = sum_log_rate_loss(g.bce[0], g.bce[1], k, cfg.fairness_w, cfg.rate_floor);
        for (int u = 0; u < users; ++u) {
            const auto i = static_cast<std::size_t>(u);
            g.objective = ad::add(g.objective, penalty(g.v[i], g.aclr[i], state.lambda_aclr[i], state.lambda_papr[i],
                                                       state.eta, cfg.eps_aclr));
        }
    }
    return g;
}

namespace {

double to_db(double x)
{
    return 10.0 * std::log10(x);
}

nlohmann::json finite_or_null(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

// LLR and bit blocks of one user at data positions, from graph values.
std::pair<LlrBlock, BitBlock> user_blocks(const Tensor& llrs, const Tensor& bits, int user, int k, std::size_t off)
{
    const std::size_t m = llrs.shape[0];
    const std::size_t n = llrs.shape[1];
    const std::size_t outputs = llrs.shape[2];
    LlrBlock lb(m * (n - off), k);
    BitBlock bb(m * (n - off), k);
    std::size_t row = 0;
    for (std::size_t b = 0; b < m; ++b) {
        for (std::size_t i = off; i < n; ++i, ++row) {
            for (int j = 0; j < k; ++j) {
                const std::size_t src = (b * n + i) * outputs + static_cast<std::size_t>(user * k + j);
                lb(row, j) = llrs.data[src];
                bb(row, j) = static_cast<std::uint8_t>(bits.data[src] > 0.5);
            }
        }
    }
    return {std::move(lb), std::move(bb)};
}

}  // namespace

std::string to_json_line(const StepLog& log)
{
    nlohmann::json j;
    j["step"] = log.step;
    j["u"] = log.outer;
    j["loss"] = log.loss;
    j["rate"] = log.rate;
    j["aclr_db"] = finite_or_null(log.aclr_db);
    j["V"] = log.v;
    j["lambda_A"] = log.lambda_a;
    j["lambda_P"] = log.lambda_p;
    j["eta"] = log.eta;
    j["objective"] = finite_or_null(log.objective);
    if (log.user_loss.size() > 1) {
        j["user_loss"] = log.user_loss;
        j["user_rate"] = log.user_rate;
        j["user_aclr_db"] = log.user_aclr_db;
        j["user_V"] = log.user_v;
    }
    return j.dump();
}

Trainer::Trainer(TrainConfig cfg) : Trainer(cfg, init_state(cfg)) {}

Trainer::Trainer(TrainConfig cfg, TrainState state)
    : cfg_(std::move(cfg)),
      state_(std::move(state)),
      inband_(inband_matrix(cfg_.inband_bandwidth / cfg_.symbol_period, cfg_.duration(), cfg_.half_width)),
      noise_(cfg_.duration(), cfg_.symbol_period, cfg_.half_width),
      awgn_taps_(tap_matrices(MultipathCIR::awgn(), cfg_.duration(), cfg_.half_width, cfg_.symbol_period)),
      rng_(cfg_.seed, 0x5452414E)  // "TRAN"
{
    cfg_.validate();
    if (state_.adam.m.size() != state_.params.size()) {
        state_.adam.m.clear();
        state_.adam.v.clear();
        for (std::size_t i = 0; i < state_.params.size(); ++i) {
            state_.adam.m.emplace_back(state_.params.tensor(i).shape, 0.0);
            state_.adam.v.emplace_back(state_.params.tensor(i).shape, 0.0);
        }
    }
}

StepLog Trainer::step()
{
    Rng rng = rng_.fork(static_cast<std::uint64_t>(state_.step));
    const BatchData data = draw_batch(cfg_, noise_, cfg_.batch_size, rng);
    ad::Tape tape;
    const Bindings vars = bind(tape, state_.params, true);
    const StepGraph g = build_step_graph(tape, vars, cfg_, state_, data, &awgn_taps_, inband_);
    tape.backward(g.objective);

    StepLog log;
    log.step = state_.step;
    log.outer = state_.outer;
    log.objective = g.objective.item();
    log.eta = state_.eta;
    log.lambda_a = state_.lambda_aclr[0];
    log.lambda_p = state_.lambda_papr[0];
    for (int u = 0; u < cfg_.num_users(); ++u) {
        const auto i = static_cast<std::size_t>(u);
        const auto [lb, bb] = user_blocks(g.llrs.value(), g.bits.value(), u, cfg_.bits_per_symbol, cfg_.data_offset());
        log.user_loss.push_back(g.bce[i].item());
        log.user_rate.push_back(bmd_rate_estimate(lb, bb));
        log.user_aclr_db.push_back(to_db(g.aclr[i].item()));
        log.user_v.push_back(g.v[i].item());
    }
    log.loss = log.user_loss[0];
    log.rate = log.user_rate[0];
    log.aclr_db = log.user_aclr_db[0];
    log.v = log.user_v[0];

    std::vector<Tensor> grads;
    grads.reserve(state_.params.size());
    bool finite = std::isfinite(log.objective);
    for (std::size_t i = 0; i < state_.params.size(); ++i) {
        grads.push_back(tape.grad(vars.at(state_.params.name(i))));
        finite = finite && grads.back().all_finite();
    }
    if (!finite) {
        throw NonFiniteError("non-finite loss or gradient at step " + std::to_string(state_.step));
    }
    adam_step(state_.params, grads, state_.adam, cfg_.learning_rate);
    ++state_.step;
    return log;
}

void Trainer::finish_outer()
{
    std::vector<double> aclr_vals;
    std::vector<double> v_vals;
    Rng rng = rng_.fork(0x4F555445ULL + static_cast<std::uint64_t>(state_.outer));  // "OUTE"
    for (int u = 0; u < cfg_.num_users(); ++u) {
        const FilterParams tx = transmit_filter(state_, cfg_, u);
        aclr_vals.push_back(aclr(tx, inband_));
        v_vals.push_back(std::isfinite(cfg_.eps_papr)
                             ? papr_excess_V(tx, constellation(state_, cfg_, u), cfg_.eps_papr, cfg_.papr_batch,
                                             cfg_.block_length, rng)
                             : 0.0);
    }
    update_multipliers(state_, cfg_, aclr_vals, v_vals);
}

void Trainer::save(const std::string& manifest_path, const std::string& provenance,
                   const std::string& config_json) const
{
    save_checkpoint(manifest_path, state_.params, state_meta_json(state_, cfg_, config_json), provenance);
}

void Trainer::run(const TrainOutputs& out)
{
    while (state_.outer < cfg_.outer_iterations) {
        for (int i = 0; i < cfg_.inner_steps; ++i) {
            StepLog log;
            try {
                log = step();
            } catch (const NonFiniteError&) {
                if (!out.checkpoint_path.empty()) {
                    save(out.checkpoint_path, out.provenance, out.config_json);
                }
                throw;
            }
            if (out.log != nullptr) {
                *out.log << to_json_line(log) << '\n';
            }
            if (out.on_step) {
                out.on_step(log);
            }
        }
        finish_outer();
        if (!out.checkpoint_path.empty() && cfg_.checkpoint_every > 0 && state_.outer % cfg_.checkpoint_every == 0) {
            save(out.checkpoint_path, out.provenance, out.config_json);
        }
        if (out.on_outer) {
            out.on_outer(state_);
        }
    }
    if (out.log != nullptr) {
        out.log->flush();
    }
    if (!out.checkpoint_path.empty()) {
        save(out.checkpoint_path, out.provenance, out.config_json);
    }
}

TrainState train(const TrainConfig& cfg, const TrainOutputs& out)
{
    Trainer t(cfg);
    t.run(out);
    return t.state();
}

std::string state_meta_json(const TrainState& s, const TrainConfig& cfg, const std::string& config_json)
{
    nlohmann::json j;
    if (!config_json.empty()) {
        j["config"] = nlohmann::json::parse(config_json);
    }
    j["mode"] = to_string(cfg.mode);
    j["bits_per_symbol"] = cfg.bits_per_symbol;
    j["half_width"] = cfg.half_width;
    j["duration_symbols"] = cfg.duration_symbols;
    j["block_length"] = cfg.block_length;
    j["lambda_A"] = s.lambda_aclr;
    j["lambda_P"] = s.lambda_papr;
    j["eta"] = s.eta;
    j["outer"] = s.outer;
    j["step"] = s.step;
    return j.dump();
}

TrainState state_from_checkpoint(const ParamSet& params, const std::string& meta_json)
{
    TrainState s;
    s.params = params;
    const auto j = nlohmann::json::parse(meta_json.empty() ? "{}" : meta_json);
    s.lambda_aclr = j.value("lambda_A", std::vector<double>{0.0});
    s.lambda_papr = j.value("lambda_P", std::vector<double>{0.0});
    s.eta = j.value("eta", 0.0);
    s.outer = j.value("outer", 0);
    s.step = j.value("step", 0L);
    for (std::size_t i = 0; i < s.params.size(); ++i) {
        s.adam.m.emplace_back(s.params.tensor(i).shape, 0.0);
        s.adam.v.emplace_back(s.params.tensor(i).shape, 0.0);
    }
    return s;
}

std::vector<double> evaluate_rate(const TrainState& s, const TrainConfig& cfg, double snr_db, std::size_t num_blocks,
                                  std::uint64_t seed, int threads)
{
    const int users = cfg.num_users();
    const int k = cfg.bits_per_symbol;
    const std::size_t n = cfg.block_length;
    const std::size_t off = cfg.data_offset();
    const FilterParams rx = receive_filter(s, cfg);
    std::vector<FilterParams> txs;
    std::vector<Constellation> cons;
    for (int u = 0; u < users; ++u) {
        txs.push_back(transmit_filter(s, cfg, u));
        cons.push_back(constellation(s, cfg, u));
    }
    const auto pilots = pilot_symbols(s, cfg);
    const ParamSet rxp = receiver_params(s);
    const ReceiverConfig rcfg = receiver_config(cfg);
    const BandedNoiseFactor noise(rx, n0_from_snr_db(snr_db), cfg.symbol_period, n);
    const MultipathCIR awgn = MultipathCIR::awgn();
    std::vector<ChannelRealization> awgn_taps;
    for (int u = 0; u < users; ++u) {
        awgn_taps.push_back(channel_taps(txs[static_cast<std::size_t>(u)], rx, awgn, cfg.symbol_period));
    }

    // bce[block * users + u]
    std::vector<double> bce(num_blocks * static_cast<std::size_t>(users), 0.0);
    auto run_block = [&](std::size_t blk) {
        Rng rng(seed, blk);
        std::vector<cplx> r(n, 0.0);
        std::vector<BitBlock> bits;
        MultipathCIR cir = awgn;
        if (cfg.mode == TrainMode::multipath) {
            cir = synth_tdl_cir(cfg.tdl, rng);
        }
        for (int u = 0; u < users; ++u) {
            const auto ui = static_cast<std::size_t>(u);
            bits.push_back(BitBlock::random(n, k, rng));
            std::vector<cplx> sym(n);
            for (std::size_t i = 0; i < n; ++i) {
                sym[i] = i < off ? pilots[i] : cons[ui].points[bits.back().symbol_index(i)];
            }
            const auto taps = cfg.mode == TrainMode::multipath ? channel_taps(txs[ui], rx, cir, cfg.symbol_period)
                                                               : awgn_taps[ui];
            const auto ru = apply_channel(sym, taps);
            for (std::size_t i = 0; i < n; ++i) {
                r[i] += ru[i];
            }
        }
        const auto w = noise.sample(rng);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] += w[i];
        }
        ad::Tape tape;
        Tensor re(Shape{1, n});
        Tensor im(Shape{1, n});
        for (std::size_t i = 0; i < n; ++i) {
            re[i] = r[i].real();
            im[i] = r[i].imag();
        }
        const Var out = receiver_forward({tape.constant(std::move(re)), tape.constant(std::move(im))},
                                         bind(tape, rxp, false), rcfg);
        const Tensor& l = out.value();
        for (int u = 0; u < users; ++u) {
            LlrBlock lb(n - off, k);
            BitBlock bb(n - off, k);
            for (std::size_t i = off; i < n; ++i) {
                for (int j = 0; j < k; ++j) {
                    lb(i - off, j) = l.data[i * static_cast<std::size_t>(k * users) + static_cast<std::size_t>(u * k + j)];
                    bb(i - off, j) = bits[static_cast<std::size_t>(u)](i, j);
                }
            }
            bce[blk * static_cast<std::size_t>(users) + static_cast<std::size_t>(u)] = bce_bits(lb, bb);
        }
    };

    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1) {
        for (std::size_t b = 0; b < num_blocks; ++b) {
            run_block(b);
        }
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t b = t; b < num_blocks; b += workers) {
                    run_block(b);
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    std::vector<double> rates;
    for (int u = 0; u < users; ++u) {
        double acc = 0.0;
        for (std::size_t b = 0; b < num_blocks; ++b) {
            acc += bce[b * static_cast<std::size_t>(users) + static_cast<std::size_t>(u)];
        }
        rates.push_back(k - acc / static_cast<double>(num_blocks));
    }
    return rates;
}

}  // namespace wavelearn
