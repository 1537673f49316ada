#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include <json.hpp>

#include "modrec/tensor.hpp"

namespace modrec {

/// How a frame of n complex samples becomes a token sequence.
///
///  Direct         n/l disjoint chunks, token = [I block | Q block], d = 2l.
///  Overlapping    chunks of l samples advancing by stride w (= l/2 unless
///                 overridden), token count (n - l)/w + 1, d = 2l.
///  ConvIQ         disjoint chunks as 2xl channel maps pushed through a
///                 shared real conv (same padding, ReLU), d = l*Nc.
///  ConvIQComplex  same chunks treated as one complex channel pushed through
///                 a complex conv realized with real arithmetic, d = 2*l*Nc.
enum class TokenStrategy { Direct, Overlapping, ConvIQ, ConvIQComplex };

const char* strategy_name(TokenStrategy s);
TokenStrategy strategy_from_name(const std::string& name);

struct TokenizerConfig {
    TokenStrategy strategy = TokenStrategy::Direct;
    std::int64_t l = 16;   // samples per token
    std::int64_t w = 0;    // overlap stride; 0 = default (l/2 overlapping, l otherwise)
    std::int64_t nc = 8;   // conv output channels
    std::int64_t k = 3;    // conv kernel width, odd

    std::int64_t stride() const;
    std::int64_t token_count(std::int64_t n) const;
    /// Embedding width d produced by the front-end.
    std::int64_t embed_dim() const;
    void validate(std::int64_t n) const;

    nlohmann::ordered_json to_json() const;
    static TokenizerConfig from_json(const nlohmann::json& j);
};

/// Non-overlapping segmentation to [N x 2l] rows of [I block | Q block].
Tensor segment_direct(const double* i, const double* q, std::int64_t n, std::int64_t l);

/// Overlapping segmentation with stride w, same row layout, [N x 2l].
Tensor segment_overlapping(const double* i, const double* q, std::int64_t n,
                           std::int64_t l, std::int64_t w);

/// Disjoint chunks stacked as [N x 2 x l] channel maps (channel 0 = I).
Tensor segment_channels(const double* i, const double* q, std::int64_t n, std::int64_t l);

/// Disjoint chunks as separate real/imag [N x 1 x l] maps for the complex path.
std::pair<Tensor, Tensor> segment_complex(const double* i, const double* q,
                                          std::int64_t n, std::int64_t l);

/// Real conv front-end: conv1d(same) + ReLU, rows flattened channel-major to
/// [N x l*Nc]. `weight` is [Nc x 2 x k], `bias` [Nc].
Tensor conv_frontend(const Tensor& segments, const Tensor& weight, const Tensor& bias);

/// Complex conv front-end. With complex weight W = Wr + jWi and token
/// x = i + jq: Re(W*x) = Wr*i - Wi*q + br, Im(W*x) = Wr*q + Wi*i + bi.
/// Both parts pass through ReLU and are flattened channel-major, real block
/// then imaginary block, to [N x 2*l*Nc]. Weights are [Nc x 1 x k].
Tensor complex_conv_frontend(const Tensor& seg_i, const Tensor& seg_q, const Tensor& wr,
                             const Tensor& wi, const Tensor& br, const Tensor& bi);

/// Pre-activation halves of the complex front-end (the linear map itself).
std::pair<Tensor, Tensor> complex_conv_linear(const Tensor& seg_i, const Tensor& seg_q,
                                              const Tensor& wr, const Tensor& wi,
                                              const Tensor& br, const Tensor& bi);

}  // namespace modrec
