#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wavelearn/closed_form.hpp"
#include "wavelearn/dsp_core.hpp"
#include "wavelearn/metrics.hpp"
#include "wavelearn/modem.hpp"

namespace wavelearn {

// 64-bit FNV-1a of a byte string as 16 hex digits.
std::string content_hash(const std::string& text);

// "# wavelearn <version> config=<hash> seed=<seed>"; every text output
// starts with it. JSON outputs carry the same string in "provenance".
std::string provenance_line(const std::string& config_hash, std::uint64_t seed);

void write_filter_csv(const std::string& path, const FilterParams& f, const std::string& provenance);
CVec read_filter_csv(const std::string& path);

// Sampled g(t) on `times`.
void write_pulse_csv(const std::string& path, const FilterParams& f, const std::vector<double>& times,
                     const std::string& provenance);

void write_constellation_csv(const std::string& path, const Constellation& c, const std::string& provenance);
Constellation read_constellation_csv(const std::string& path);

void write_points_csv(const std::string& path, const std::vector<cplx>& points, const std::string& provenance);

void write_curve_csv(const std::string& path, const CurveSeries& c, const std::string& provenance);
CurveSeries read_curve_csv(const std::string& path);

struct ScalarMetric {
    std::string name;
    double value = 0.0;
    std::string units;
    std::size_t num_samples = 0;
    std::uint64_t seed = 0;
};

// {"provenance": ..., "metrics": [{name, value, units, num_samples, seed}, ...]}
void write_scalar_json(const std::string& path, const std::vector<ScalarMetric>& metrics,
                       const std::string& provenance);
std::vector<ScalarMetric> read_scalar_json(const std::string& path);

// In-band matrix cache keyed by (W D, S).
void write_inband_csv(const std::string& path, const InbandMatrix& e, const std::string& provenance);
std::optional<InbandMatrix> read_inband_csv(const std::string& path, double bandwidth, double duration,
                                            int half_width);
InbandMatrix cached_inband_matrix(const std::string& cache_dir, double bandwidth, double duration, int half_width);

}  // namespace wavelearn
