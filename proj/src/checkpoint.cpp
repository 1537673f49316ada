#include "modrec/checkpoint.hpp"

#include <fstream>

namespace modrec {

using nlohmann::ordered_json;

void save_checkpoint(const std::string& path, const ordered_json& model_config,
                     const ParameterStore& params) {
    ordered_json manifest = ordered_json::array();
    std::int64_t offset = 0;
    for (const auto& [name, t] : params.entries()) {
        ordered_json entry;
        entry["path"] = name;
        entry["shape"] = t.shape();
        entry["offset"] = offset;
        manifest.push_back(entry);
        offset += t.size() * static_cast<std::int64_t>(sizeof(double));
    }
    ordered_json header;
    header["format_version"] = kCheckpointFormatVersion;
    header["model_config"] = model_config;
    header["manifest"] = manifest;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open checkpoint for writing: " + path);
    out << header.dump() << '\n';
    for (const auto& [name, t] : params.entries()) {
        (void)name;
        out.write(reinterpret_cast<const char*>(t.data().data()),
                  static_cast<std::streamsize>(t.data().size() * sizeof(double)));
    }
    if (!out) throw DataError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    std::string header_line;
    if (!std::getline(in, header_line)) throw DataError("checkpoint missing header: " + path);
    ordered_json header = ordered_json::parse(header_line, nullptr, false);
    if (header.is_discarded()) throw DataError("checkpoint header is not valid JSON: " + path);
    if (header.value("format_version", -1) != kCheckpointFormatVersion)
        throw DataError("unsupported checkpoint format version in " + path);

    Checkpoint ckpt;
    ckpt.model_config = header.at("model_config");
    const std::streampos blob_start = in.tellg();
    for (const auto& entry : header.at("manifest")) {
        const std::string name = entry.at("path").get<std::string>();
        Shape shape = entry.at("shape").get<Shape>();
        const std::int64_t offset = entry.at("offset").get<std::int64_t>();
        const std::int64_t count = shape_numel(shape);
        std::vector<double> data(static_cast<std::size_t>(count));
        in.seekg(blob_start + static_cast<std::streamoff>(offset));
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
        if (!in) throw DataError("checkpoint blob truncated at parameter " + name);
        ckpt.params.emplace_back(name, Tensor::from_data(std::move(shape), std::move(data)));
    }
    return ckpt;
}

void restore_parameters(ParameterStore& params, const Checkpoint& ckpt) {
    if (ckpt.params.size() != params.count())
        throw DataError("checkpoint holds " + std::to_string(ckpt.params.size()) +
                        " parameters, store expects " + std::to_string(params.count()));
    for (const auto& [name, src] : ckpt.params) {
        Tensor& dst = params.at(name);
        if (dst.shape() != src.shape())
            throw DataError("checkpoint shape mismatch for " + name + ": " + shape_str(src.shape()) +
                            " vs " + shape_str(dst.shape()));
        dst.data() = src.data();
    }
}

}  // namespace modrec
