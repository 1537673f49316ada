#include "modrec/tokenizer.hpp"

#include <vector>

#include "modrec/errors.hpp"

namespace modrec {

using nlohmann::json;
using nlohmann::ordered_json;

const char* strategy_name(TokenStrategy s) {
    switch (s) {
        case TokenStrategy::Direct: return "direct";
        case TokenStrategy::Overlapping: return "overlapping";
        case TokenStrategy::ConvIQ: return "conv-iq";
        case TokenStrategy::ConvIQComplex: return "conv-iq-complex";
    }
    throw ConfigError("unknown token strategy id");
}

TokenStrategy strategy_from_name(const std::string& name) {
    for (const auto s : {TokenStrategy::Direct, TokenStrategy::Overlapping,
                         TokenStrategy::ConvIQ, TokenStrategy::ConvIQComplex})
        if (name == strategy_name(s)) return s;
    throw ConfigError("unknown token strategy '" + name + "'");
}

std::int64_t TokenizerConfig::stride() const {
    if (w > 0) return w;
    return strategy == TokenStrategy::Overlapping ? l / 2 : l;
}

std::int64_t TokenizerConfig::token_count(std::int64_t n) const {
    validate(n);
    if (strategy == TokenStrategy::Overlapping) return (n - l) / stride() + 1;
    return n / l;
}

std::int64_t TokenizerConfig::embed_dim() const {
    switch (strategy) {
        case TokenStrategy::Direct:
        case TokenStrategy::Overlapping: return 2 * l;
        case TokenStrategy::ConvIQ: return l * nc;
        case TokenStrategy::ConvIQComplex: return 2 * l * nc;
    }
    throw ConfigError("unknown token strategy id");
}

void TokenizerConfig::validate(std::int64_t n) const {
    if (l < 1) throw ConfigError("tokenizer: token size l must be >= 1");
    if (n < l) throw ConfigError("tokenizer: frame length n must be >= token size l");
    const std::int64_t s = stride();
    if (strategy == TokenStrategy::Overlapping) {
        if (s < 1 || s > l)
            throw ConfigError("tokenizer: overlap stride must lie in [1, l]");
        if ((n - l) % s != 0)
            throw ConfigError("tokenizer: n - l must be divisible by the stride");
    } else {
        if (n % l != 0)
            throw ConfigError("tokenizer: frame length n must be divisible by l");
    }
    if (strategy == TokenStrategy::ConvIQ || strategy == TokenStrategy::ConvIQComplex) {
        if (nc < 1) throw ConfigError("tokenizer: conv channels nc must be >= 1");
        if (k < 1 || k % 2 == 0)
            throw ConfigError("tokenizer: conv kernel width must be odd and >= 1");
    }
}

ordered_json TokenizerConfig::to_json() const {
    ordered_json j = {{"strategy", strategy_name(strategy)}, {"l", l}};
    if (strategy == TokenStrategy::Overlapping) j["w"] = stride();
    if (strategy == TokenStrategy::ConvIQ || strategy == TokenStrategy::ConvIQComplex) {
        j["nc"] = nc;
        j["k"] = k;
    }
    return j;
}

TokenizerConfig TokenizerConfig::from_json(const json& j) {
    TokenizerConfig cfg;
    if (!j.contains("strategy")) throw ConfigError("tokenizer: missing 'strategy'");
    cfg.strategy = strategy_from_name(j.at("strategy").get<std::string>());
    if (!j.contains("l")) throw ConfigError("tokenizer: missing token size 'l'");
    cfg.l = j.at("l").get<std::int64_t>();
    cfg.w = j.value("w", cfg.w);
    cfg.nc = j.value("nc", cfg.nc);
    cfg.k = j.value("k", cfg.k);
    return cfg;
}

namespace {

void check_segment_args(std::int64_t n, std::int64_t l, std::int64_t w) {
    if (l < 1 || w < 1 || w > l || n < l)
        throw ConfigError("segmentation: need 1 <= stride <= l <= n");
    if ((n - l) % w != 0)
        throw ConfigError("segmentation: n - l must be divisible by the stride");
}

}  // namespace

Tensor segment_direct(const double* i, const double* q, std::int64_t n, std::int64_t l) {
    return segment_overlapping(i, q, n, l, l);
}

Tensor segment_overlapping(const double* i, const double* q, std::int64_t n,
                           std::int64_t l, std::int64_t w) {
    check_segment_args(n, l, w);
    const std::int64_t count = (n - l) / w + 1;
    Tensor out = Tensor::zeros({count, 2 * l});
    auto& dst = out.data();
    for (std::int64_t t = 0; t < count; ++t) {
        const std::int64_t base = t * w;
        for (std::int64_t j = 0; j < l; ++j) {
            dst[t * 2 * l + j] = i[base + j];
            dst[t * 2 * l + l + j] = q[base + j];
        }
    }
    return out;
}

Tensor segment_channels(const double* i, const double* q, std::int64_t n, std::int64_t l) {
    check_segment_args(n, l, l);
    const std::int64_t count = n / l;
    Tensor out = Tensor::zeros({count, 2, l});
    auto& dst = out.data();
    for (std::int64_t t = 0; t < count; ++t)
        for (std::int64_t j = 0; j < l; ++j) {
            dst[(t * 2 + 0) * l + j] = i[t * l + j];
            dst[(t * 2 + 1) * l + j] = q[t * l + j];
        }
    return out;
}

std::pair<Tensor, Tensor> segment_complex(const double* i, const double* q,
                                          std::int64_t n, std::int64_t l) {
    check_segment_args(n, l, l);
    const std::int64_t count = n / l;
    Tensor re = Tensor::zeros({count, 1, l});
    Tensor im = Tensor::zeros({count, 1, l});
    for (std::int64_t t = 0; t < count; ++t)
        for (std::int64_t j = 0; j < l; ++j) {
            re.data()[t * l + j] = i[t * l + j];
            im.data()[t * l + j] = q[t * l + j];
        }
    return {re, im};
}

Tensor conv_frontend(const Tensor& segments, const Tensor& weight, const Tensor& bias) {
    const Tensor y = relu(conv1d_same(segments, weight, bias));
    const std::int64_t count = y.dim(0);
    return reshape(y, {count, y.dim(1) * y.dim(2)});
}

std::pair<Tensor, Tensor> complex_conv_linear(const Tensor& seg_i, const Tensor& seg_q,
                                              const Tensor& wr, const Tensor& wi,
                                              const Tensor& br, const Tensor& bi) {
    const Tensor zero_bias = Tensor::zeros({br.dim(0)});
    const Tensor re = sub(conv1d_same(seg_i, wr, br), conv1d_same(seg_q, wi, zero_bias));
    const Tensor im = add(conv1d_same(seg_q, wr, bi), conv1d_same(seg_i, wi, zero_bias));
    return {re, im};
}

Tensor complex_conv_frontend(const Tensor& seg_i, const Tensor& seg_q, const Tensor& wr,
                             const Tensor& wi, const Tensor& br, const Tensor& bi) {
    auto [re, im] = complex_conv_linear(seg_i, seg_q, wr, wi, br, bi);
    re = relu(re);
    im = relu(im);
    const std::int64_t count = re.dim(0);
    const std::int64_t flat = re.dim(1) * re.dim(2);
    return concat_cols({reshape(re, {count, flat}), reshape(im, {count, flat})});
}

}  // namespace modrec
