#include "wavelearn/neuralrx.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "wavelearn/errors.hpp"

namespace wavelearn {

using ad::Shape;
using ad::Tensor;
using ad::Var;

void ReceiverConfig::validate() const
{
    if (num_blocks < 0 || channels < 1 || outputs < 1) {
        throw ConfigError("receiver needs non-negative block count and positive channel/output counts");
    }
    if (kernel_size < 1 || kernel_size % 2 == 0) {
        throw ConfigError("receiver kernel size must be odd");
    }
    if (static_cast<int>(dilations.size()) != num_blocks) {
        throw ConfigError("receiver needs one dilation per block");
    }
    for (int d : dilations) {
        if (d < 1) {
            throw ConfigError("receiver dilations must be at least 1");
        }
    }
    if (pilot_len < 0 || pilot_embed < 0) {
        throw ConfigError("pilot length and embedding size must be non-negative");
    }
}

int ReceiverConfig::receptive_radius() const
{
    int sum = 0;
    for (int d : dilations) {
        sum += d;
    }
    return (kernel_size - 1) / 2 * (2 + 2 * sum);
}

void ParamSet::add(const std::string& name, Tensor value)
{
    if (contains(name)) {
        throw ConfigError("duplicate parameter name " + name);
    }
    index_[name] = entries_.size();
    entries_.emplace_back(name, std::move(value));
}

Tensor& ParamSet::at(const std::string& name)
{
    const auto it = index_.find(name);
    if (it == index_.end()) {
        throw ConfigError("unknown parameter " + name);
    }
    return entries_[it->second].second;
}

const Tensor& ParamSet::at(const std::string& name) const
{
    const auto it = index_.find(name);
    if (it == index_.end()) {
        throw ConfigError("unknown parameter " + name);
    }
    return entries_[it->second].second;
}

std::size_t ParamSet::total_size() const
{
    std::size_t n = 0;
    for (const auto& e : entries_) {
        n += e.second.size();
    }
    return n;
}

namespace {

Tensor uniform_tensor(Shape shape, double fan_in, Rng& rng)
{
    Tensor t(std::move(shape));
    const double b = 1.0 / std::sqrt(fan_in);
    for (double& v : t.data) {
        v = rng.uniform(-b, b);
    }
    return t;
}

std::string block_name(int block, const char* part)
{
    return "rx.block" + std::to_string(block) + "." + part;
}

}  // namespace

ParamSet init_receiver(const ReceiverConfig& cfg, Rng& rng)
{
    cfg.validate();
    const auto k = static_cast<std::size_t>(cfg.kernel_size);
    const auto c = static_cast<std::size_t>(cfg.channels);
    const auto cin = static_cast<std::size_t>(cfg.input_channels());
    const auto cout = static_cast<std::size_t>(cfg.outputs);
    ParamSet p;
    if (cfg.pilot_len > 0 && cfg.pilot_embed > 0) {
        const auto in = static_cast<std::size_t>(2 * cfg.pilot_len);
        const auto hid = static_cast<std::size_t>(2 * cfg.pilot_embed);
        const auto emb = static_cast<std::size_t>(cfg.pilot_embed);
        p.add("rx.pilot.w1", uniform_tensor({in, hid}, static_cast<double>(in), rng));
        p.add("rx.pilot.b1", uniform_tensor({hid}, static_cast<double>(in), rng));
        p.add("rx.pilot.w2", uniform_tensor({hid, hid}, static_cast<double>(hid), rng));
        p.add("rx.pilot.b2", uniform_tensor({hid}, static_cast<double>(hid), rng));
        p.add("rx.pilot.w3", uniform_tensor({hid, emb}, static_cast<double>(hid), rng));
        p.add("rx.pilot.b3", uniform_tensor({emb}, static_cast<double>(hid), rng));
    }
    p.add("rx.in.w", uniform_tensor({k, cin, c}, static_cast<double>(k * cin), rng));
    p.add("rx.in.b", uniform_tensor({c}, static_cast<double>(k * cin), rng));
    for (int b = 0; b < cfg.num_blocks; ++b) {
        p.add(block_name(b, "dw1"), uniform_tensor({k, c}, static_cast<double>(k), rng));
        p.add(block_name(b, "pw1"), uniform_tensor({c, c}, static_cast<double>(c), rng));
        p.add(block_name(b, "pb1"), uniform_tensor({c}, static_cast<double>(c), rng));
        p.add(block_name(b, "dw2"), uniform_tensor({k, c}, static_cast<double>(k), rng));
        p.add(block_name(b, "pw2"), uniform_tensor({c, c}, static_cast<double>(c), rng));
        p.add(block_name(b, "pb2"), uniform_tensor({c}, static_cast<double>(c), rng));
    }
    p.add("rx.out.w", uniform_tensor({k, c, cout}, static_cast<double>(k * c), rng));
    p.add("rx.out.b", uniform_tensor({cout}, static_cast<double>(k * c), rng));
    return p;
}

Bindings bind(ad::Tape& tape, const ParamSet& params, bool trainable)
{
    Bindings out;
    for (std::size_t i = 0; i < params.size(); ++i) {
        out[params.name(i)] = trainable ? tape.leaf(params.tensor(i)) : tape.constant(params.tensor(i));
    }
    return out;
}

namespace {
Var get(const Bindings& p, const std::string& name)
{
    const auto it = p.find(name);
    if (it == p.end()) {
        throw ConfigError("receiver parameter " + name + " is not bound");
    }
    return it->second;
}
}  // namespace

Var c2r(const ad::ComplexVar& r)
{
    const Shape& s = r.re.shape();
    if (s.size() != 2 || r.im.shape() != s) {
        throw DimensionError("c2r expects matching [B, N] parts, got " + ad::shape_string(s) + " and " +
                             ad::shape_string(r.im.shape()));
    }
    const Shape col{s[0], s[1], 1};
    return ad::concat({ad::reshape(r.re, col), ad::reshape(r.im, col)}, 2);
}

Var c2r(ad::Tape& tape, std::span<const cplx> r)
{
    Tensor t(Shape{1, r.size(), 2});
    for (std::size_t i = 0; i < r.size(); ++i) {
        t.data[2 * i] = r[i].real();
        t.data[2 * i + 1] = r[i].imag();
    }
    return tape.constant(std::move(t));
}

Var resnet_block(Var x, const Bindings& p, int block, const ReceiverConfig& cfg)
{
    const auto d = static_cast<std::size_t>(cfg.dilations.at(static_cast<std::size_t>(block)));
    Var y = ad::depthwise_conv1d(ad::relu(x), get(p, block_name(block, "dw1")), d);
    y = ad::bias_add(ad::pointwise_conv1d(y, get(p, block_name(block, "pw1"))), get(p, block_name(block, "pb1")));
    y = ad::depthwise_conv1d(ad::relu(y), get(p, block_name(block, "dw2")), d);
    y = ad::bias_add(ad::pointwise_conv1d(y, get(p, block_name(block, "pw2"))), get(p, block_name(block, "pb2")));
    return ad::add(x, y);
}

Var pilot_embedding(const ad::ComplexVar& r, const Bindings& p, const ReceiverConfig& cfg)
{
    const auto np = static_cast<std::size_t>(cfg.pilot_len);
    if (r.re.shape().size() != 2 || r.re.shape()[1] < np) {
        throw DimensionError("pilot embedding needs at least N_P received samples per block");
    }
    Var in = ad::concat({ad::slice(r.re, 1, 0, np), ad::slice(r.im, 1, 0, np)}, 1);
    Var h = ad::relu(ad::bias_add(ad::matmul(in, get(p, "rx.pilot.w1")), get(p, "rx.pilot.b1")));
    h = ad::relu(ad::bias_add(ad::matmul(h, get(p, "rx.pilot.w2")), get(p, "rx.pilot.b2")));
    return ad::bias_add(ad::matmul(h, get(p, "rx.pilot.w3")), get(p, "rx.pilot.b3"));
}

Var receiver_forward(const ad::ComplexVar& r, const Bindings& p, const ReceiverConfig& cfg)
{
    Var x = c2r(r);
    if (cfg.pilot_len > 0 && cfg.pilot_embed > 0) {
        const std::size_t n = r.re.shape()[1];
        Var z = pilot_embedding(r, p, cfg);
        x = ad::concat({x, ad::expand(z, 1, n)}, 2);
    }
    x = ad::bias_add(ad::conv1d(x, get(p, "rx.in.w")), get(p, "rx.in.b"));
    for (int b = 0; b < cfg.num_blocks; ++b) {
        x = resnet_block(x, p, b, cfg);
    }
    return ad::bias_add(ad::conv1d(x, get(p, "rx.out.w")), get(p, "rx.out.b"));
}

namespace {
LlrBlock run_receiver(std::span<const cplx> r, const ParamSet& params, const ReceiverConfig& cfg)
{
    ad::Tape tape;
    Tensor re(Shape{1, r.size()});
    Tensor im(Shape{1, r.size()});
    for (std::size_t i = 0; i < r.size(); ++i) {
        re[i] = r[i].real();
        im[i] = r[i].imag();
    }
    const ad::ComplexVar rv{tape.constant(std::move(re)), tape.constant(std::move(im))};
    const Var out = receiver_forward(rv, bind(tape, params, false), cfg);
    LlrBlock llrs(r.size(), cfg.outputs);
    llrs.values = out.value().data;
    return llrs;
}
}  // namespace

LlrBlock neural_llrs_awgn(std::span<const cplx> r, const ParamSet& params, const ReceiverConfig& cfg)
{
    if (cfg.pilot_len != 0) {
        throw ConfigError("AWGN receiver requires pilot_len = 0");
    }
    return run_receiver(r, params, cfg);
}

LlrBlock neural_llrs_multipath(std::span<const cplx> r, const ParamSet& params, const ReceiverConfig& cfg)
{
    if (cfg.pilot_len <= 0) {
        throw ConfigError("multipath receiver requires pilot_len > 0");
    }
    return run_receiver(r, params, cfg);
}

namespace {

void write_le(std::ostream& out, double v)
{
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) {
        bits = __builtin_bswap64(bits);
    }
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
}

double read_le(std::istream& in)
{
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), sizeof bits);
    if constexpr (std::endian::native == std::endian::big) {
        bits = __builtin_bswap64(bits);
    }
    return std::bit_cast<double>(bits);
}

std::filesystem::path blob_path(const std::filesystem::path& manifest)
{
    std::string stem = manifest.filename().string();
    const std::string suffix = ".manifest.json";
    if (stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0) {
        stem = stem.substr(0, stem.size() - suffix.size());
    } else {
        stem = manifest.stem().string();
    }
    return manifest.parent_path() / (stem + ".bin");
}

}  // namespace

void save_checkpoint(const std::string& manifest_path, const ParamSet& params, const std::string& meta_json,
                     const std::string& provenance)
{
    const std::filesystem::path mpath(manifest_path);
    const auto bpath = blob_path(mpath);
    nlohmann::json manifest;
    manifest["provenance"] = provenance;
    manifest["format"] = "float64-le";
    manifest["blob"] = bpath.filename().string();
    manifest["meta"] = meta_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(meta_json);
    auto& tensors = manifest["tensors"];
    tensors = nlohmann::json::array();

    std::ofstream blob(bpath, std::ios::binary);
    if (!blob) {
        throw ConfigError("cannot write " + bpath.string());
    }
    std::size_t offset = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor& t = params.tensor(i);
        tensors.push_back({{"name", params.name(i)}, {"shape", t.shape}, {"offset", offset}});
        for (double v : t.data) {
            write_le(blob, v);
        }
        offset += t.size() * sizeof(double);
    }
    std::ofstream out(mpath);
    if (!out) {
        throw ConfigError("cannot write " + manifest_path);
    }
    out << manifest.dump(2) << "\n";
}

ParamSet load_checkpoint(const std::string& manifest_path, std::string* meta_json)
{
    std::ifstream in(manifest_path);
    if (!in) {
        throw ConfigError("cannot read checkpoint manifest " + manifest_path);
    }
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed checkpoint manifest " + manifest_path + ": " + e.what());
    }
    const auto bpath = std::filesystem::path(manifest_path).parent_path() / manifest.at("blob").get<std::string>();
    std::ifstream blob(bpath, std::ios::binary);
    if (!blob) {
        throw ConfigError("cannot read checkpoint blob " + bpath.string());
    }
    ParamSet params;
    for (const auto& entry : manifest.at("tensors")) {
        const auto shape = entry.at("shape").get<Shape>();
        Tensor t(shape);
        blob.seekg(static_cast<std::streamoff>(entry.at("offset").get<std::size_t>()));
        for (double& v : t.data) {
            v = read_le(blob);
        }
        if (!blob) {
            throw ConfigError("checkpoint blob " + bpath.string() + " is truncated");
        }
        params.add(entry.at("name").get<std::string>(), std::move(t));
    }
    if (meta_json) {
        *meta_json = manifest.value("meta", nlohmann::json::object()).dump();
    }
    return params;
}

}  // namespace wavelearn
