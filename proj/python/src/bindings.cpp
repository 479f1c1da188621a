#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <vector>

#include "wavelearn/cli.hpp"
#include "wavelearn/closed_form.hpp"
#include "wavelearn/config.hpp"
#include "wavelearn/dsp_core.hpp"
#include "wavelearn/errors.hpp"
#include "wavelearn/linkchan.hpp"
#include "wavelearn/modem.hpp"
#include "wavelearn/oracle_suites.hpp"

namespace py = pybind11;
using namespace wavelearn;

namespace {

FilterParams transmit_filter(const CVec& coeffs, double duration, double symbol_period)
{
    FilterParams f;
    f.coeffs = coeffs;
    f.duration = duration;
    f.symbol_period = symbol_period;
    f.normalized = true;
    f.validate();
    return f;
}

RrcParams rrc(double beta, double duration, double symbol_period)
{
    RrcParams p;
    p.rolloff_beta = beta;
    p.duration = duration;
    p.symbol_period = symbol_period;
    p.validate();
    return p;
}

}  // namespace

PYBIND11_MODULE(_wavelearn, m)
{
    m.attr("__version__") = WAVELEARN_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);

    m.def(
        "windowed_rrc",
        [](double beta, double duration, int half_width, double symbol_period, bool windowed) {
            return WindowedRrc(rrc(beta, duration, symbol_period), windowed).project(half_width).coeffs;
        },
        py::arg("beta"), py::arg("duration") = 32.0, py::arg("half_width") = 100, py::arg("symbol_period") = 1.0,
        py::arg("windowed") = true);

    m.def(
        "aclr_db",
        [](const CVec& coeffs, double duration, double bandwidth, double symbol_period) {
            const FilterParams tx = transmit_filter(coeffs, duration, symbol_period);
            return linear_to_db(aclr(tx, inband_matrix(bandwidth / symbol_period, duration, tx.half_width())));
        },
        py::arg("coeffs"), py::arg("duration"), py::arg("bandwidth") = 1.0, py::arg("symbol_period") = 1.0);

    m.def(
        "filter_time",
        [](const CVec& coeffs, double duration, const std::vector<double>& t, double symbol_period) {
            const FilterParams tx = transmit_filter(coeffs, duration, symbol_period);
            std::vector<cplx> out;
            out.reserve(t.size());
            for (double v : t) {
                out.push_back(eval_filter_time(tx, v));
            }
            return out;
        },
        py::arg("coeffs"), py::arg("duration"), py::arg("t"), py::arg("symbol_period") = 1.0);

    m.def(
        "qam_gray", [](int bits) { return qam_gray(bits).points; }, py::arg("bits_per_symbol"));

    m.def(
        "baseline_rate",
        [](const CVec& coeffs, double duration, double snr_db, std::size_t block_length, std::size_t num_blocks,
           std::uint64_t seed, int bits_per_symbol) {
            const FilterParams tx = transmit_filter(coeffs, duration, 1.0);
            py::gil_scoped_release release;
            return baseline_rate(tx, matched_receive_filter(tx), qam_gray(bits_per_symbol), snr_db, block_length,
                                 num_blocks, seed);
        },
        py::arg("coeffs"), py::arg("duration"), py::arg("snr_db"), py::arg("block_length") = 1000,
        py::arg("num_blocks") = 10, py::arg("seed") = 0, py::arg("bits_per_symbol") = 4);

    m.def(
        "run_suite",
        [](const std::string& name, std::uint64_t seed) {
            oracle::SuiteReport rep;
            {
                py::gil_scoped_release release;
                rep = oracle::run_suite(name, seed);
            }
            py::dict d;
            d["suite"] = rep.suite;
            d["passed"] = rep.passed();
            d["cases"] = rep.cases.size();
            d["max_error"] = rep.max_error();
            return d;
        },
        py::arg("name"), py::arg("seed") = 0);

    m.def(
        "parse_config", [](const std::string& text) { return run_config_json(parse_run_config(text)); },
        py::arg("json_text"));

    m.def(
        "config_hash", [](const std::string& text) { return config_hash(parse_run_config(text)); },
        py::arg("json_text"));

    m.def(
        "cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "wavelearn");
            std::vector<char*> argv;
            for (auto& a : args) {
                argv.push_back(a.data());
            }
            py::gil_scoped_release release;
            return run_cli(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"));
}
