#pragma once

#include <string>
#include <vector>

#include "modrec/model.hpp"

namespace modrec {

/// A named standard architecture. `reference_params` is the published
/// parameter count the instantiated model is expected to approximate
/// (0 when there is no published figure).
struct Preset {
    std::string name;
    std::string description;
    ModelConfig config;
    double reference_params = 0.0;
};

/// The standard grid: direct and overlapping tokenizers at l in {8,16,32,64},
/// the conv-IQ family, the complex-conv family, and the small/large conv-IQ
/// variants. Defaults: 1024-sample frames, 8 classes, 4 layers, 2 heads,
/// 64-wide FFN, 32-wide classifier hidden layer, dropout 0.1.
const std::vector<Preset>& presets();

/// nullptr when the name is unknown.
const Preset* find_preset(const std::string& name);

/// Throwing lookup for CLI/config paths; the error lists valid names.
const Preset& preset_or_throw(const std::string& name);

}  // namespace modrec
