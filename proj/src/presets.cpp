#include "modrec/presets.hpp"

#include <sstream>

#include "modrec/errors.hpp"

namespace modrec {

namespace {

ModelConfig base_config() {
    ModelConfig cfg;
    cfg.n = 1024;
    cfg.num_layers = 4;
    cfg.num_heads = 2;
    cfg.ffn_dim = 64;
    cfg.classifier_hidden = 32;
    cfg.dropout = 0.1;
    cfg.num_classes = 8;
    return cfg;
}

Preset direct(const std::string& name, std::int64_t l, double ref) {
    Preset p;
    p.name = name;
    p.description = "direct tokenizer, " + std::to_string(l) + "-sample tokens";
    p.config = base_config();
    p.config.tokenizer.strategy = TokenStrategy::Direct;
    p.config.tokenizer.l = l;
    p.reference_params = ref;
    return p;
}

Preset overlapping(const std::string& name, std::int64_t l, double ref) {
    Preset p = direct(name, l, ref);
    p.description = "overlapping tokenizer (stride l/2), " + std::to_string(l) +
                    "-sample tokens";
    p.config.tokenizer.strategy = TokenStrategy::Overlapping;
    return p;
}

Preset conv_iq(const std::string& name, std::int64_t l, std::int64_t nc, double ref,
               std::int64_t layers = 4, std::int64_t heads = 2) {
    Preset p;
    p.name = name;
    std::ostringstream desc;
    desc << "conv tokenizer, l=" << l << ", " << nc << " channels, " << layers
         << " layers, " << heads << " heads";
    p.description = desc.str();
    p.config = base_config();
    p.config.tokenizer.strategy = TokenStrategy::ConvIQ;
    p.config.tokenizer.l = l;
    p.config.tokenizer.nc = nc;
    p.config.num_layers = layers;
    p.config.num_heads = heads;
    p.reference_params = ref;
    return p;
}

Preset conv_complex(const std::string& name, std::int64_t l, std::int64_t nc, double ref) {
    Preset p = conv_iq(name, l, nc, ref);
    std::ostringstream desc;
    desc << "complex conv tokenizer, l=" << l << ", " << nc << " complex channels";
    p.description = desc.str();
    p.config.tokenizer.strategy = TokenStrategy::ConvIQComplex;
    return p;
}

}  // namespace

const std::vector<Preset>& presets() {
    static const std::vector<Preset> table = {
        direct("transdirect-8", 8, 17.2e3),
        direct("transdirect-16", 16, 44.1e3),
        direct("transdirect-32", 32, 128e3),
        direct("transdirect-64", 64, 420e3),
        overlapping("transdirect-overlap-8", 8, 17.2e3),
        overlapping("transdirect-overlap-16", 16, 44.1e3),
        overlapping("transdirect-overlap-32", 32, 128e3),
        overlapping("transdirect-overlap-64", 64, 420e3),
        conv_iq("transiq-8", 8, 8, 128e3),
        conv_iq("transiq-8-nc16", 8, 16, 420e3),
        conv_iq("transiq-16", 16, 8, 420e3),
        conv_iq("transiq-32", 32, 8, 1.5e6),
        conv_iq("transiq-small", 8, 8, 179e3, 6, 2),
        conv_iq("transiq-large", 8, 8, 229e3, 8, 4),
        conv_complex("transiq-complex-8", 8, 8, 420e3),
        conv_complex("transiq-complex-16", 16, 8, 1.5e6),
        conv_complex("transiq-complex-32", 32, 8, 5.6e6),
    };
    return table;
}

const Preset* find_preset(const std::string& name) {
    for (const auto& p : presets())
        if (p.name == name) return &p;
    return nullptr;
}

const Preset& preset_or_throw(const std::string& name) {
    const Preset* p = find_preset(name);
    if (p != nullptr) return *p;
    std::ostringstream msg;
    msg << "unknown preset '" << name << "'; available:";
    for (const auto& q : presets()) msg << ' ' << q.name;
    throw ConfigError(msg.str());
}

}  // namespace modrec
