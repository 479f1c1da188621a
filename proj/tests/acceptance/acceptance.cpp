// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "wavelearn/closed_form.hpp"
#include "wavelearn/config.hpp"
#include "wavelearn/linkchan.hpp"
#include "wavelearn/metrics.hpp"
#include "wavelearn/oracle_suites.hpp"
#include "wavelearn/oracles.hpp"
#include "wavelearn/trainer.hpp"

using namespace wavelearn;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double to_db(double x)
{
    return 10.0 * std::log10(x);
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// S = 20, D = 8T, N = 128, K = 4, M = 10, eps_A = -30 dB, eps_P = 6 dB,
// 50 x 100 steps with the desk penalty schedule.
TrainConfig desk_config(TrainMode mode)
{
    TrainConfig c;
    c.mode = mode;
    c.block_length = 128;
    c.bits_per_symbol = 4;
    c.duration_symbols = 8;
    c.half_width = 20;
    c.batch_size = 10;
    c.papr_batch = 1000;
    c.eps_aclr = db_to_linear(-30.0);
    c.eps_papr = db_to_linear(6.0);
    c.eta0 = 1e3;
    c.eta_growth = 1.05;
    c.inner_steps = 100;
    c.outer_iterations = 50;
    c.snr_db = 10.0;
    c.seed = 0;
    return c;
}

constexpr std::size_t kEvalSymbols = 100000;
constexpr std::size_t kPaprSamples = 100000;

std::size_t eval_blocks(const TrainConfig& c)
{
    return (kEvalSymbols + c.block_length - 1) / c.block_length;
}

FilterParams baseline_pulse(double beta, double duration, int half_width, bool windowed = true)
{
    RrcParams p;
    p.rolloff_beta = beta;
    p.duration = duration;
    return WindowedRrc(p, windowed).project(half_width);
}

Outcome criterion1()
{
    const InbandMatrix e = inband_matrix(1.0, 32.0, 100);
    const double a0 = to_db(aclr(baseline_pulse(0.0, 32.0, 100), e));
    const double a1 = to_db(aclr(baseline_pulse(1.0, 32.0, 100), e));
    const bool pass = std::abs(a0 - (-21.47)) <= 0.5 && std::abs(a1 - (-6.53)) <= 0.5;
    return {pass, "ACLR beta=0 " + fmt("%.3f", a0) + " dB (target -21.47 +-0.5), beta=1 " + fmt("%.3f", a1) +
                      " dB (target -6.53 +-0.5)"};
}

Outcome criterion2()
{
    const FilterParams tx = baseline_pulse(1.0, 32.0, 100, false);
    const FilterParams rx = matched_receive_filter(tx);
    const Constellation c = qam_gray(4);
    double isi = 0.0;
    for (int l = 1; l <= 32; ++l) {
        isi = std::max({isi, std::abs(filter_cross_correlation(tx, rx, l)),
                        std::abs(filter_cross_correlation(tx, rx, -l))});
    }
    isi /= std::abs(filter_cross_correlation(tx, rx, 0.0));
    const double r = baseline_rate(tx, rx, c, 10.0, 1000, kEvalSymbols / 1000, 2, 1);
    const double gmi = oracle::gauss_hermite_gmi(c, n0_from_snr_db(10.0));
    const bool pass = std::abs(r - 3.16) <= 0.05 && std::abs(r - gmi) <= 0.01;
    return {pass, "R=" + fmt("%.4f", r) + " at 1e5 symbols (target 3.16 +-0.05), Gauss-Hermite GMI " +
                      fmt("%.4f", gmi) + " (+-0.01), pulse ISI " + fmt("%.1e", isi)};
}

Outcome suite_outcome(const oracle::SuiteReport& rep, double tol)
{
    std::ostringstream s;
    s << rep.cases.size() << " cases, max rel. error " << fmt("%.2e", rep.max_error()) << " (<= " << tol << ")";
    for (const auto& f : rep.failures()) {
        s << "; " << f.name << " " << fmt("%.2e", f.error);
    }
    return {rep.passed(), s.str()};
}

Outcome criterion3()
{
    return suite_outcome(oracle::quadrature_suite(100, 1, 1e-6), 1e-6);
}

Outcome criterion4()
{
    return suite_outcome(oracle::gradient_suite(2, 1e-4), 1e-4);
}

struct TrainedLink {
    std::vector<double> aclr_db;
    std::vector<double> v;
    std::vector<double> rate;
};

TrainedLink train_and_measure(const TrainConfig& cfg)
{
    Trainer t(cfg);
    TrainOutputs out;
    out.on_outer = [&](const TrainState& s) {
        if (s.outer % 10 == 0) {
            std::fprintf(stderr, "  outer %d/%d eta %.3g\n", s.outer, cfg.outer_iterations, s.eta);
        }
    };
    t.run(out);
    TrainedLink m;
    Rng rng(cfg.seed, 0x56414343);  // "VACC"
    for (int u = 0; u < cfg.num_users(); ++u) {
        const FilterParams tx = transmit_filter(t.state(), cfg, u);
        m.aclr_db.push_back(to_db(aclr(tx, t.inband())));
        m.v.push_back(
            papr_excess_V(tx, constellation(t.state(), cfg, u), db_to_linear(6.0), kPaprSamples, cfg.block_length, rng));
    }
    m.rate = evaluate_rate(t.state(), cfg, 10.0, eval_blocks(cfg), Rng::mix(cfg.seed, 0x52414343), 1);  // "RACC"
    return m;
}

Outcome criterion5()
{
    const TrainedLink m = train_and_measure(desk_config(TrainMode::awgn));
    const bool pass = m.aclr_db[0] <= -29.5 && m.v[0] <= 1e-3 && m.rate[0] >= 2.0;
    return {pass, "ACLR " + fmt("%.3f", m.aclr_db[0]) + " dB (<= -29.5), V " + fmt("%.2e", m.v[0]) +
                      " at M'=1e5 (<= 1e-3), R " + fmt("%.4f", m.rate[0]) + " at 10 dB (>= 2.0)"};
}

Outcome criterion6()
{
    TrainConfig c = desk_config(TrainMode::awgn);
    c.eps_aclr = kInactive;
    c.eps_papr = kInactive;
    const TrainedLink m = train_and_measure(c);
    return {m.rate[0] >= 3.0, "unconstrained R " + fmt("%.4f", m.rate[0]) + " at 10 dB (>= 3.0), ACLR " +
                                  fmt("%.2f", m.aclr_db[0]) + " dB"};
}

Outcome criterion7()
{
    const FilterParams tx = baseline_pulse(0.25, 8.0, 20);
    const Constellation c = qam_gray(4);
    std::vector<double> th;
    for (int i = 0; i <= 120; ++i) {
        th.push_back(0.1 * i);
    }
    Rng rc(7, 1);
    const CurveSeries ccdf = power_ccdf(tx, c, th, kPaprSamples, 128, rc);
    bool monotone = true;
    for (std::size_t i = 1; i < ccdf.y.size(); ++i) {
        monotone = monotone && ccdf.y[i] <= ccdf.y[i - 1];
    }

    Rng ra(7, 2);
    Rng rb(7, 3);
    const PowerSamples a = PowerSamples::draw(tx.duration, tx.symbol_period, c.size(), kPaprSamples, ra);
    PowerSamples b = PowerSamples::draw(tx.duration, tx.symbol_period, c.size(), kPaprSamples, rb);
    for (double& t : b.times) {
        t += tx.symbol_period;
    }
    const auto pa = instant_powers(tx, c, a);
    const auto ks = oracle::ks_two_sample(pa, instant_powers(tx, c, b));

    const double pbar = average_power(128, tx.symbol_period, tx.duration);
    std::vector<double> norm;
    for (double p : pa) {
        norm.push_back(p / pbar);
    }
    bool v_monotone = true;
    double prev = papr_excess(norm, 1.0);
    for (double db = 0.25; db <= 12.0; db += 0.25) {
        const double v = papr_excess(norm, db_to_linear(db));
        v_monotone = v_monotone && v <= prev;
        prev = v;
    }
    const bool pass = monotone && ks.p_value > 0.01 && v_monotone;
    return {pass, std::string("CCDF monotone ") + (monotone ? "yes" : "no") + ", KS(t vs t+T) D=" +
                      fmt("%.4f", ks.statistic) + " p=" + fmt("%.3f", ks.p_value) + " (> 0.01), V monotone in eps_P " +
                      (v_monotone ? "yes" : "no")};
}

Outcome criterion8()
{
    TrainConfig c = desk_config(TrainMode::awgn);
    c.eta0 = 1e-2;
    c.eta_growth = 1.003;
    c.inner_steps = 20;
    c.outer_iterations = 6;
    Trainer t(c);
    bool eta_ok = t.state().eta == c.eta0;
    bool lambda_ok = true;
    double max_identity = 0.0;
    long steps = 0;
    double la = 0.0;
    double lp = 0.0;
    TrainOutputs out;
    out.on_step = [&](const StepLog& log) {
        max_identity = std::max(max_identity, std::abs(log.loss + log.rate - c.bits_per_symbol));
        ++steps;
    };
    out.on_outer = [&](const TrainState& s) {
        eta_ok = eta_ok && s.eta == c.eta0 * std::pow(1.003, s.outer);
        lambda_ok = lambda_ok && s.lambda_aclr[0] <= la && s.lambda_papr[0] <= lp;
        la = s.lambda_aclr[0];
        lp = s.lambda_papr[0];
    };
    t.run(out);
    const bool pass = eta_ok && lambda_ok && max_identity <= 1e-9 && t.state().outer == c.outer_iterations;
    return {pass, std::string("eta = eta0 1.003^u exactly: ") + (eta_ok ? "yes" : "no") +
                      ", lambda non-increasing: " + (lambda_ok ? "yes" : "no") + " (lambda_A " + fmt("%.3g", la) +
                      "), max |L - (K - R)| " + fmt("%.1e", max_identity) + " over " + std::to_string(steps) +
                      " steps (<= 1e-9)"};
}

Outcome criterion9()
{
    TrainConfig c = desk_config(TrainMode::two_user);
    c.fairness_w = 0.5;
    const TrainedLink m = train_and_measure(c);
    const bool pass =
        m.rate[0] > 0.5 && m.rate[1] > 0.5 && m.aclr_db[0] <= -29.5 && m.aclr_db[1] <= -29.5;
    return {pass, "R1 " + fmt("%.4f", m.rate[0]) + ", R2 " + fmt("%.4f", m.rate[1]) + " (> 0.5), ACLR1 " +
                      fmt("%.3f", m.aclr_db[0]) + " dB, ACLR2 " + fmt("%.3f", m.aclr_db[1]) + " dB (<= -29.5)"};
}

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"baseline ACLR anchors", criterion1},
        {"baseline AWGN rate anchor", criterion2},
        {"closed forms vs quadrature", criterion3},
        {"gradient suite", criterion4},
        {"constraint enforcement at desk scale", criterion5},
        {"unconstrained sanity", criterion6},
        {"stationarity and CCDF properties", criterion7},
        {"training loop mechanics", criterion8},
        {"two-user smoke", criterion9},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        selected.insert(std::atoi(argv[i]));
    }
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && selected.count(id) == 0) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %d %s: %s (%.1f s) %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first, secs,
                    o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
