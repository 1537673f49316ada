#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "modrec/params.hpp"

namespace modrec {

/// Checkpoint file layout: one JSON header line
///   {"format_version", "model_config", "manifest": [{"path","shape","offset"}...]}
/// followed by raw little-endian 64-bit floats in manifest order. Offsets are
/// byte positions within the float blob.
inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
    nlohmann::ordered_json model_config;
    std::vector<std::pair<std::string, Tensor>> params;
};

void save_checkpoint(const std::string& path, const nlohmann::ordered_json& model_config,
                     const ParameterStore& params);

Checkpoint load_checkpoint(const std::string& path);

/// Copies checkpoint values into an existing store; paths and shapes must match.
void restore_parameters(ParameterStore& params, const Checkpoint& ckpt);

}  // namespace modrec
