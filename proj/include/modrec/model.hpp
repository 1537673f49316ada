#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "modrec/params.hpp"
#include "modrec/tokenizer.hpp"

namespace modrec {

/// Classifier hyperparameters. The embedding width d and token count N are
/// derived from the tokenizer and frame length; every token strategy feeds
/// the same encoder: linear projection (d -> d), learned class token and
/// positional embeddings, pre-norm self-attention blocks, and a two-layer
/// head read off the class-token row.
struct ModelConfig {
    TokenizerConfig tokenizer;
    std::int64_t n = 1024;             // samples per frame
    std::int64_t num_layers = 4;
    std::int64_t num_heads = 2;
    std::int64_t ffn_dim = 64;
    std::int64_t classifier_hidden = 32;
    double dropout = 0.1;
    std::int64_t num_classes = 8;
    double ln_eps = 1e-5;

    std::int64_t embed_dim() const { return tokenizer.embed_dim(); }
    std::int64_t token_count() const { return tokenizer.token_count(n); }
    std::int64_t head_dim() const { return embed_dim() / num_heads; }
    void validate() const;

    nlohmann::ordered_json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

struct ParamBreakdown {
    std::vector<std::pair<std::string, std::int64_t>> components;
    std::int64_t total = 0;
};

/// Closed-form parameter count; matches the instantiated model exactly.
ParamBreakdown count_parameters(const ModelConfig& cfg);

/// Attention probability matrices captured during a forward pass, one
/// [N+1 x N+1] row-stochastic tensor per (layer, head) in layer-major order.
struct AttentionCapture {
    std::vector<Tensor> probs;
};

class Model {
  public:
    Model(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }

    /// Front-end tokens for one frame of cfg.n samples: [N x d]. For the
    /// conv strategies this includes the learnable conv + ReLU.
    Tensor tokenize(const double* i, const double* q) const;

    /// Projection, class-token prepend, positional add: [N x d] -> [(N+1) x d].
    Tensor project_and_embed(const Tensor& tokens) const;

    /// Stack of pre-norm encoder blocks; shape preserved.
    Tensor encoder_forward(const Tensor& x, bool training, Rng* rng,
                           AttentionCapture* capture = nullptr) const;

    /// Two-layer head over the class-token row: [1 x num_classes] logits.
    Tensor classify(const Tensor& encoded, bool training, Rng* rng) const;

    /// Full forward pass for one frame.
    Tensor logits(const double* i, const double* q, bool training, Rng* rng,
                  AttentionCapture* capture = nullptr) const;

    /// Argmax class of an eval-mode forward pass (no graph, no dropout).
    int predict(const double* i, const double* q) const;

  private:
    Tensor maybe_dropout(const Tensor& x, bool training, Rng* rng) const;

    ModelConfig cfg_;
    ParameterStore params_;
};

}  // namespace modrec
