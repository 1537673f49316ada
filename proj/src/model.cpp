#include "modrec/model.hpp"

#include <algorithm>
#include <cmath>

#include "modrec/errors.hpp"

namespace modrec {

using nlohmann::json;
using nlohmann::ordered_json;

void ModelConfig::validate() const {
    tokenizer.validate(n);
    if (num_layers < 1) throw ConfigError("model: num_layers must be >= 1");
    if (num_heads < 1) throw ConfigError("model: num_heads must be >= 1");
    if (embed_dim() % num_heads != 0)
        throw ConfigError("model: embedding width " + std::to_string(embed_dim()) +
                          " not divisible by " + std::to_string(num_heads) + " heads");
    if (ffn_dim < 1) throw ConfigError("model: ffn_dim must be >= 1");
    if (classifier_hidden < 1) throw ConfigError("model: classifier_hidden must be >= 1");
    if (num_classes < 2) throw ConfigError("model: need at least 2 classes");
    if (dropout < 0.0 || dropout >= 1.0)
        throw ConfigError("model: dropout must lie in [0, 1)");
    if (ln_eps <= 0.0) throw ConfigError("model: ln_eps must be > 0");
}

ordered_json ModelConfig::to_json() const {
    return {{"tokenizer", tokenizer.to_json()},
            {"n", n},
            {"layers", num_layers},
            {"heads", num_heads},
            {"ffn_dim", ffn_dim},
            {"classifier_hidden", classifier_hidden},
            {"dropout", dropout},
            {"classes", num_classes},
            {"ln_eps", ln_eps}};
}

ModelConfig ModelConfig::from_json(const json& j) {
    ModelConfig cfg;
    if (!j.contains("tokenizer")) throw ConfigError("model: missing 'tokenizer'");
    cfg.tokenizer = TokenizerConfig::from_json(j.at("tokenizer"));
    if (!j.contains("n")) throw ConfigError("model: missing frame length 'n'");
    cfg.n = j.at("n").get<std::int64_t>();
    cfg.num_layers = j.value("layers", cfg.num_layers);
    cfg.num_heads = j.value("heads", cfg.num_heads);
    cfg.ffn_dim = j.value("ffn_dim", cfg.ffn_dim);
    cfg.classifier_hidden = j.value("classifier_hidden", cfg.classifier_hidden);
    cfg.dropout = j.value("dropout", cfg.dropout);
    cfg.num_classes = j.value("classes", cfg.num_classes);
    cfg.ln_eps = j.value("ln_eps", cfg.ln_eps);
    cfg.validate();
    return cfg;
}

ParamBreakdown count_parameters(const ModelConfig& cfg) {
    cfg.validate();
    const std::int64_t d = cfg.embed_dim();
    const std::int64_t N = cfg.token_count();
    const std::int64_t f = cfg.ffn_dim;
    const std::int64_t h = cfg.classifier_hidden;
    const std::int64_t c = cfg.num_classes;

    ParamBreakdown out;
    auto push = [&](const std::string& name, std::int64_t count) {
        out.components.emplace_back(name, count);
        out.total += count;
    };
    if (cfg.tokenizer.strategy == TokenStrategy::ConvIQ)
        push("conv-frontend", cfg.tokenizer.nc * 2 * cfg.tokenizer.k + cfg.tokenizer.nc);
    else if (cfg.tokenizer.strategy == TokenStrategy::ConvIQComplex)
        push("conv-frontend", 2 * cfg.tokenizer.nc * cfg.tokenizer.k + 2 * cfg.tokenizer.nc);
    push("projection", d * d + d);
    push("class-token", d);
    push("positional", (N + 1) * d);
    const std::int64_t per_layer =
        4 * (d * d + d)            // q/k/v/output projections
        + (d * f + f) + (f * d + d)  // feed-forward pair
        + 4 * d;                   // two layer norms, gain + bias each
    push("encoder", cfg.num_layers * per_layer);
    push("classifier", d * h + h + h * c + c);
    return out;
}

Model::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), params_(seed) {
    cfg_.validate();
    const std::int64_t d = cfg_.embed_dim();
    const std::int64_t N = cfg_.token_count();
    const auto& tok = cfg_.tokenizer;

    if (tok.strategy == TokenStrategy::ConvIQ) {
        params_.add_uniform("frontend.conv.weight", {tok.nc, 2, tok.k}, 2 * tok.k);
        params_.add_zeros("frontend.conv.bias", {tok.nc});
    } else if (tok.strategy == TokenStrategy::ConvIQComplex) {
        // Real-arithmetic fan-in of the complex map: 2 real inputs per kernel tap.
        params_.add_uniform("frontend.conv.wr", {tok.nc, 1, tok.k}, 2 * tok.k);
        params_.add_uniform("frontend.conv.wi", {tok.nc, 1, tok.k}, 2 * tok.k);
        params_.add_zeros("frontend.conv.br", {tok.nc});
        params_.add_zeros("frontend.conv.bi", {tok.nc});
    }
    params_.add_uniform("embed.proj.weight", {d, d}, d);
    params_.add_zeros("embed.proj.bias", {d});
    params_.add_zeros("embed.cls", {1, d});
    params_.add_zeros("embed.pos", {N + 1, d});
    for (std::int64_t layer = 0; layer < cfg_.num_layers; ++layer) {
        const std::string p = "encoder." + std::to_string(layer) + ".";
        params_.add_full(p + "norm1.gain", {d}, 1.0);
        params_.add_zeros(p + "norm1.bias", {d});
        for (const char* proj : {"wq", "wk", "wv", "wo"})
            params_.add_uniform(p + "attn." + proj, {d, d}, d);
        for (const char* bias : {"bq", "bk", "bv", "bo"})
            params_.add_zeros(p + "attn." + bias, {d});
        params_.add_full(p + "norm2.gain", {d}, 1.0);
        params_.add_zeros(p + "norm2.bias", {d});
        params_.add_uniform(p + "ffn.w1", {d, cfg_.ffn_dim}, d);
        params_.add_zeros(p + "ffn.b1", {cfg_.ffn_dim});
        params_.add_uniform(p + "ffn.w2", {cfg_.ffn_dim, d}, cfg_.ffn_dim);
        params_.add_zeros(p + "ffn.b2", {d});
    }
    params_.add_uniform("classifier.w1", {d, cfg_.classifier_hidden}, d);
    params_.add_zeros("classifier.b1", {cfg_.classifier_hidden});
    params_.add_uniform("classifier.w2", {cfg_.classifier_hidden, cfg_.num_classes},
                        cfg_.classifier_hidden);
    params_.add_zeros("classifier.b2", {cfg_.num_classes});
}

Tensor Model::maybe_dropout(const Tensor& x, bool training, Rng* rng) const {
    if (!training || cfg_.dropout == 0.0) return x;
    if (rng == nullptr)
        throw ContractError("model: training-mode forward needs a dropout rng");
    return dropout(x, cfg_.dropout, true, *rng);
}

Tensor Model::tokenize(const double* i, const double* q) const {
    const auto& tok = cfg_.tokenizer;
    switch (tok.strategy) {
        case TokenStrategy::Direct:
            return segment_direct(i, q, cfg_.n, tok.l);
        case TokenStrategy::Overlapping:
            return segment_overlapping(i, q, cfg_.n, tok.l, tok.stride());
        case TokenStrategy::ConvIQ:
            return conv_frontend(segment_channels(i, q, cfg_.n, tok.l),
                                 params_.at("frontend.conv.weight"),
                                 params_.at("frontend.conv.bias"));
        case TokenStrategy::ConvIQComplex: {
            auto [re, im] = segment_complex(i, q, cfg_.n, tok.l);
            return complex_conv_frontend(re, im, params_.at("frontend.conv.wr"),
                                         params_.at("frontend.conv.wi"),
                                         params_.at("frontend.conv.br"),
                                         params_.at("frontend.conv.bi"));
        }
    }
    throw ConfigError("model: unknown token strategy");
}

Tensor Model::project_and_embed(const Tensor& tokens) const {
    if (tokens.ndim() != 2 || tokens.dim(0) != cfg_.token_count() ||
        tokens.dim(1) != cfg_.embed_dim())
        throw DimensionError("model: token matrix is " + shape_str(tokens.shape()) +
                             ", expected [" + std::to_string(cfg_.token_count()) + " x " +
                             std::to_string(cfg_.embed_dim()) + "]");
    Tensor x = add_rowvec(matmul(tokens, params_.at("embed.proj.weight")),
                          params_.at("embed.proj.bias"));
    x = concat_rows({params_.at("embed.cls"), x});
    return add(x, params_.at("embed.pos"));
}

Tensor Model::encoder_forward(const Tensor& x0, bool training, Rng* rng,
                              AttentionCapture* capture) const {
    const std::int64_t d = cfg_.embed_dim();
    const std::int64_t dh = cfg_.head_dim();
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor x = x0;
    for (std::int64_t layer = 0; layer < cfg_.num_layers; ++layer) {
        const std::string p = "encoder." + std::to_string(layer) + ".";
        const Tensor h = layer_norm(x, params_.at(p + "norm1.gain"),
                                    params_.at(p + "norm1.bias"), cfg_.ln_eps);
        const Tensor qm = add_rowvec(matmul(h, params_.at(p + "attn.wq")),
                                     params_.at(p + "attn.bq"));
        const Tensor km = add_rowvec(matmul(h, params_.at(p + "attn.wk")),
                                     params_.at(p + "attn.bk"));
        const Tensor vm = add_rowvec(matmul(h, params_.at(p + "attn.wv")),
                                     params_.at(p + "attn.bv"));
        std::vector<Tensor> heads;
        heads.reserve(static_cast<std::size_t>(cfg_.num_heads));
        for (std::int64_t head = 0; head < cfg_.num_heads; ++head) {
            const Tensor qh = slice_cols(qm, head * dh, dh);
            const Tensor kh = slice_cols(km, head * dh, dh);
            const Tensor vh = slice_cols(vm, head * dh, dh);
            const Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt_dh);
            const Tensor probs = softmax(scores, 1);
            if (capture != nullptr) capture->probs.push_back(probs);
            heads.push_back(matmul(probs, vh));
        }
        Tensor attn = cfg_.num_heads == 1 ? heads[0] : concat_cols(heads);
        attn = add_rowvec(matmul(attn, params_.at(p + "attn.wo")),
                          params_.at(p + "attn.bo"));
        attn = maybe_dropout(attn, training, rng);
        x = add(x, attn);

        const Tensor h2 = layer_norm(x, params_.at(p + "norm2.gain"),
                                     params_.at(p + "norm2.bias"), cfg_.ln_eps);
        Tensor f = relu(add_rowvec(matmul(h2, params_.at(p + "ffn.w1")),
                                   params_.at(p + "ffn.b1")));
        f = add_rowvec(matmul(f, params_.at(p + "ffn.w2")), params_.at(p + "ffn.b2"));
        f = maybe_dropout(f, training, rng);
        x = add(x, f);
    }
    (void)d;
    return x;
}

Tensor Model::classify(const Tensor& encoded, bool training, Rng* rng) const {
    const Tensor row = slice_rows(encoded, 0, 1);
    Tensor z = relu(add_rowvec(matmul(row, params_.at("classifier.w1")),
                               params_.at("classifier.b1")));
    z = maybe_dropout(z, training, rng);
    return add_rowvec(matmul(z, params_.at("classifier.w2")), params_.at("classifier.b2"));
}

Tensor Model::logits(const double* i, const double* q, bool training, Rng* rng,
                     AttentionCapture* capture) const {
    const Tensor tokens = tokenize(i, q);
    const Tensor embedded = project_and_embed(tokens);
    const Tensor encoded = encoder_forward(embedded, training, rng, capture);
    return classify(encoded, training, rng);
}

int Model::predict(const double* i, const double* q) const {
    NoGradGuard guard;
    const Tensor out = logits(i, q, false, nullptr);
    const auto& v = out.data();
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace modrec
