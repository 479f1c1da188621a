#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wavelearn/ad/ops.hpp"
#include "wavelearn/modem.hpp"
#include "wavelearn/rng.hpp"

namespace wavelearn {

struct ReceiverConfig {
    int num_blocks = 5;
    int channels = 32;
    int kernel_size = 3;
    std::vector<int> dilations{1, 2, 4, 8, 16};
    int pilot_len = 0;     // N_P; 0 selects the AWGN receiver
    int pilot_embed = 64;  // N_S
    int outputs = 4;       // LLRs per symbol (K per user)

    void validate() const;
    int input_channels() const { return 2 + (pilot_len > 0 ? pilot_embed : 0); }
    // Symbols on each side that can influence one output.
    int receptive_radius() const;
};

// Ordered collection of named tensors: receiver weights and, in the
// trainer, every other trainable quantity.
class ParamSet {
public:
    void add(const std::string& name, ad::Tensor value);
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    ad::Tensor& at(const std::string& name);
    const ad::Tensor& at(const std::string& name) const;

    std::size_t size() const { return entries_.size(); }
    const std::string& name(std::size_t i) const { return entries_[i].first; }
    ad::Tensor& tensor(std::size_t i) { return entries_[i].second; }
    const ad::Tensor& tensor(std::size_t i) const { return entries_[i].second; }
    std::size_t total_size() const;

private:
    std::vector<std::pair<std::string, ad::Tensor>> entries_;
    std::map<std::string, std::size_t> index_;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
ParamSet init_receiver(const ReceiverConfig& cfg, Rng& rng);

// Tape variables for the parameters of a ParamSet.
using Bindings = std::map<std::string, ad::Var>;
Bindings bind(ad::Tape& tape, const ParamSet& params, bool trainable);

// [B, N] complex -> [B, N, 2] real (real part, imaginary part).
ad::Var c2r(const ad::ComplexVar& r);
ad::Var c2r(ad::Tape& tape, std::span<const cplx> r);

// x + F(x) with F = [relu -> depthwise dilated conv -> pointwise conv] x 2.
ad::Var resnet_block(ad::Var x, const Bindings& p, int block, const ReceiverConfig& cfg);

// Received block(s) [B, N] -> LLR logits [B, N, outputs].
ad::Var receiver_forward(const ad::ComplexVar& r, const Bindings& p, const ReceiverConfig& cfg);

// Pilot embedding z [B, N_S] from the first N_P received samples.
ad::Var pilot_embedding(const ad::ComplexVar& r, const Bindings& p, const ReceiverConfig& cfg);

LlrBlock neural_llrs_awgn(std::span<const cplx> r, const ParamSet& params, const ReceiverConfig& cfg);
LlrBlock neural_llrs_multipath(std::span<const cplx> r, const ParamSet& params, const ReceiverConfig& cfg);

// Manifest JSON naming each tensor with its shape and offset into a
// little-endian float64 blob stored next to it.
void save_checkpoint(const std::string& manifest_path, const ParamSet& params, const std::string& meta_json,
                     const std::string& provenance);
ParamSet load_checkpoint(const std::string& manifest_path, std::string* meta_json = nullptr);

}  // namespace wavelearn
