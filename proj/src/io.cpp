#include "wavelearn/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "wavelearn/errors.hpp"

namespace wavelearn {

namespace {

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path)
{
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
        std::filesystem::create_directories(parent);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path);
    }
    return out;
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + path);
    }
    return in;
}

// Data rows of a CSV: skips '#' comments and the header line.
std::vector<std::vector<std::string>> csv_rows(const std::string& path, const std::string& header)
{
    auto in = open_in(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool seen_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (!seen_header) {
            if (line != header) {
                throw Error(path + ": expected header '" + header + "', got '" + line + "'");
            }
            seen_header = true;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) {
            fields.push_back(f);
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

double parse_double(const std::string& s, const std::string& path)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw Error(path + ": not a number: '" + s + "'");
    }
}

}  // namespace

std::string content_hash(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string provenance_line(const std::string& config_hash, std::uint64_t seed)
{
    return "# wavelearn " + std::string(WAVELEARN_VERSION) + " config=" + config_hash +
           " seed=" + std::to_string(seed);
}

void write_filter_csv(const std::string& path, const FilterParams& f, const std::string& provenance)
{
    auto out = open_out(path);
    out << provenance << "\ns,re,im\n";
    const int half = f.half_width();
    for (int s = -half; s <= half; ++s) {
        out << s << ',' << num(f.coeff(s).real()) << ',' << num(f.coeff(s).imag()) << '\n';
    }
}

CVec read_filter_csv(const std::string& path)
{
    const auto rows = csv_rows(path, "s,re,im");
    if (rows.empty() || rows.size() % 2 == 0) {
        throw Error(path + ": expected an odd number of coefficients");
    }
    const int half = static_cast<int>(rows.size() - 1) / 2;
    CVec c(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != 3 || std::stoi(rows[i][0]) != static_cast<int>(i) - half) {
            throw Error(path + ": malformed row " + std::to_string(i));
        }
        c(static_cast<Eigen::Index>(i)) = cplx(parse_double(rows[i][1], path), parse_double(rows[i][2], path));
    }
    return c;
}

void write_pulse_csv(const std::string& path, const FilterParams& f, const std::vector<double>& times,
                     const std::string& provenance)
{
    auto out = open_out(path);
    out << provenance << "\nt,re,im\n";
    for (double t : times) {
        const cplx g = eval_filter_time(f, t);
        out << num(t) << ',' << num(g.real()) << ',' << num(g.imag()) << '\n';
    }
}

void write_constellation_csv(const std::string& path, const Constellation& c, const std::string& provenance)
{
    auto out = open_out(path);
    out << provenance << "\nlabel,re,im\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
        out << c.label(i) << ',' << num(c.points[i].real()) << ',' << num(c.points[i].imag()) << '\n';
    }
}

Constellation read_constellation_csv(const std::string& path)
{
    const auto rows = csv_rows(path, "label,re,im");
    Constellation c;
    if (rows.empty()) {
        throw Error(path + ": empty constellation");
    }
    c.bits_per_symbol = static_cast<int>(rows[0].at(0).size());
    c.points.assign(std::size_t{1} << c.bits_per_symbol, cplx(0.0));
    if (rows.size() != c.points.size()) {
        throw Error(path + ": expected " + std::to_string(c.points.size()) + " points");
    }
    for (const auto& r : rows) {
        if (r.size() != 3 || static_cast<int>(r[0].size()) != c.bits_per_symbol) {
            throw Error(path + ": malformed row");
        }
        const auto idx = std::stoul(r[0], nullptr, 2);
        c.points.at(idx) = cplx(parse_double(r[1], path), parse_double(r[2], path));
    }
    return c;
}

void write_points_csv(const std::string& path, const std::vector<cplx>& points, const std::string& provenance)
{
    auto out = open_out(path);
    out << provenance << "\nindex,re,im\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        out << i << ',' << num(points[i].real()) << ',' << num(points[i].imag()) << '\n';
    }
}

void write_curve_csv(const std::string& path, const CurveSeries& c, const std::string& provenance)
{
    if (c.x.size() != c.y.size()) {
        throw DimensionError("curve x and y lengths differ");
    }
    auto out = open_out(path);
    out << provenance << "\nx,y\n";
    for (std::size_t i = 0; i < c.x.size(); ++i) {
        out << num(c.x[i]) << ',' << num(c.y[i]) << '\n';
    }
}

CurveSeries read_curve_csv(const std::string& path)
{
    CurveSeries c;
    for (const auto& r : csv_rows(path, "x,y")) {
        if (r.size() != 2) {
            throw Error(path + ": malformed row");
        }
        c.x.push_back(parse_double(r[0], path));
        c.y.push_back(parse_double(r[1], path));
    }
    return c;
}

void write_scalar_json(const std::string& path, const std::vector<ScalarMetric>& metrics,
                       const std::string& provenance)
{
    nlohmann::json j;
    j["provenance"] = provenance;
    j["metrics"] = nlohmann::json::array();
    for (const auto& m : metrics) {
        j["metrics"].push_back({{"name", m.name},
                                {"value", std::isfinite(m.value) ? nlohmann::json(m.value) : nlohmann::json(nullptr)},
                                {"units", m.units},
                                {"num_samples", m.num_samples},
                                {"seed", m.seed}});
    }
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

std::vector<ScalarMetric> read_scalar_json(const std::string& path)
{
    auto in = open_in(path);
    const auto j = nlohmann::json::parse(in);
    std::vector<ScalarMetric> out;
    for (const auto& m : j.at("metrics")) {
        ScalarMetric s;
        s.name = m.at("name").get<std::string>();
        s.value = m.at("value").is_null() ? std::nan("") : m.at("value").get<double>();
        s.units = m.at("units").get<std::string>();
        s.num_samples = m.at("num_samples").get<std::size_t>();
        s.seed = m.at("seed").get<std::uint64_t>();
        out.push_back(s);
    }
    return out;
}

namespace {
std::string inband_key(double bandwidth, double duration, int half_width)
{
    return "wd=" + num(bandwidth * duration) + ",S=" + std::to_string(half_width);
}
}  // namespace

void write_inband_csv(const std::string& path, const InbandMatrix& e, const std::string& provenance)
{
    auto out = open_out(path);
    out << provenance << '\n' << inband_key(e.bandwidth, e.duration, e.half_width()) << '\n';
    for (Eigen::Index i = 0; i < e.entries.rows(); ++i) {
        for (Eigen::Index j = 0; j < e.entries.cols(); ++j) {
            out << (j == 0 ? "" : ",") << num(e.entries(i, j) * e.duration);
        }
        out << '\n';
    }
}

std::optional<InbandMatrix> read_inband_csv(const std::string& path, double bandwidth, double duration,
                                            int half_width)
{
    std::ifstream in(path);
    if (!in) {
        return std::nullopt;
    }
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line[0] == '#') {
        std::getline(in, line);
    }
    if (line != inband_key(bandwidth, duration, half_width)) {
        return std::nullopt;
    }
    const auto n = static_cast<Eigen::Index>(2 * half_width + 1);
    InbandMatrix e;
    e.bandwidth = bandwidth;
    e.duration = duration;
    e.entries.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::getline(in, line)) {
            return std::nullopt;
        }
        std::stringstream ss(line);
        std::string f;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!std::getline(ss, f, ',')) {
                return std::nullopt;
            }
            e.entries(i, j) = parse_double(f, path) / duration;
        }
    }
    return e;
}

InbandMatrix cached_inband_matrix(const std::string& cache_dir, double bandwidth, double duration, int half_width)
{
    const std::string name = "inband_wd" + num(bandwidth * duration) + "_S" + std::to_string(half_width) + ".csv";
    const std::string path = (std::filesystem::path(cache_dir) / name).string();
    if (auto hit = read_inband_csv(path, bandwidth, duration, half_width)) {
        return *hit;
    }
    InbandMatrix e = inband_matrix(bandwidth, duration, half_width);
    write_inband_csv(path, e, "# wavelearn " + std::string(WAVELEARN_VERSION) + " inband cache");
    return e;
}

}  // namespace wavelearn
