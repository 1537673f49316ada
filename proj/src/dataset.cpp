#include "modrec/dataset.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>

#include "modrec/errors.hpp"

namespace modrec {

using nlohmann::json;
using nlohmann::ordered_json;

Dataset Dataset::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("dataset: cannot open '" + path + "'");

    std::string header_line;
    if (!std::getline(in, header_line))
        throw DataError("dataset: '" + path + "' has no header line");
    Dataset ds;
    try {
        ds.header_ = ordered_json::parse(header_line);
    } catch (const json::exception& e) {
        throw DataError("dataset: bad header in '" + path + "': " + e.what());
    }
    for (const char* key : {"format_version", "n", "frames", "classes"})
        if (!ds.header_.contains(key))
            throw DataError(std::string("dataset: header missing '") + key + "'");
    if (ds.header_.at("format_version").get<int>() != 1)
        throw DataError("dataset: unsupported format version");
    ds.n_ = ds.header_.at("n").get<std::int64_t>();
    ds.frames_ = ds.header_.at("frames").get<std::int64_t>();
    for (const auto& name : ds.header_.at("classes"))
        ds.class_names_.push_back(name.get<std::string>());
    if (ds.n_ < 1 || ds.frames_ < 1 || ds.class_names_.empty())
        throw DataError("dataset: degenerate header in '" + path + "'");

    const std::size_t rec_size = static_cast<std::size_t>(8 * ds.n_ + 5);
    std::vector<unsigned char> body(static_cast<std::size_t>(ds.frames_) * rec_size);
    in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(body.size()));
    if (in.gcount() != static_cast<std::streamsize>(body.size()))
        throw DataError("dataset: '" + path + "' truncated (expected " +
                        std::to_string(body.size()) + " record bytes)");
    if (in.peek() != std::ifstream::traits_type::eof())
        throw DataError("dataset: '" + path + "' has trailing bytes");

    ds.iq_.resize(static_cast<std::size_t>(ds.frames_) * 2 * static_cast<std::size_t>(ds.n_));
    ds.labels_.resize(static_cast<std::size_t>(ds.frames_));
    ds.snrs_.resize(static_cast<std::size_t>(ds.frames_));
    for (std::int64_t idx = 0; idx < ds.frames_; ++idx) {
        const unsigned char* rec = body.data() + static_cast<std::size_t>(idx) * rec_size;
        std::memcpy(ds.iq_.data() + idx * 2 * ds.n_, rec, static_cast<std::size_t>(8 * ds.n_));
        const unsigned char label = rec[8 * ds.n_];
        if (label >= ds.class_names_.size())
            throw DataError("dataset: record " + std::to_string(idx) + " label " +
                            std::to_string(int(label)) + " out of range");
        ds.labels_[static_cast<std::size_t>(idx)] = label;
        std::memcpy(&ds.snrs_[static_cast<std::size_t>(idx)], rec + 8 * ds.n_ + 1, 4);
    }
    return ds;
}

namespace {

// Split n records as close to 60/20/20 as possible: floor each share, then
// hand the leftover records to the largest fractional remainders
// (train -> val -> test on ties).
std::array<std::int64_t, 3> split_sizes(std::int64_t n) {
    const double fractions[3] = {0.6, 0.2, 0.2};
    std::array<std::int64_t, 3> sizes{};
    double fracs[3];
    std::int64_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
        const double exact = fractions[k] * static_cast<double>(n);
        sizes[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(std::floor(exact + 1e-9));
        fracs[k] = exact - static_cast<double>(sizes[static_cast<std::size_t>(k)]);
        assigned += sizes[static_cast<std::size_t>(k)];
    }
    std::array<int, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fracs[a] > fracs[b]; });
    for (std::int64_t r = 0; r < n - assigned; ++r)
        ++sizes[static_cast<std::size_t>(order[static_cast<std::size_t>(r % 3)])];
    return sizes;
}

void append_split(Splits& out, const std::vector<std::int64_t>& pool) {
    const auto sizes = split_sizes(static_cast<std::int64_t>(pool.size()));
    std::size_t pos = 0;
    for (std::int64_t k = 0; k < sizes[0]; ++k) out.train.indices.push_back(pool[pos++]);
    for (std::int64_t k = 0; k < sizes[1]; ++k) out.val.indices.push_back(pool[pos++]);
    for (std::int64_t k = 0; k < sizes[2]; ++k) out.test.indices.push_back(pool[pos++]);
}

}  // namespace

Splits split_dataset(const Dataset& data, std::uint64_t seed, bool stratified) {
    if (data.size() < 5)
        throw ConfigError("split: need at least 5 records for a 60/20/20 partition");
    Rng rng(derive_seed(seed, 0x5354));
    std::vector<std::int64_t> perm(static_cast<std::size_t>(data.size()));
    for (std::int64_t i = 0; i < data.size(); ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(perm);

    Splits out;
    out.train.data = out.val.data = out.test.data = &data;
    if (!stratified) {
        append_split(out, perm);
        return out;
    }
    for (std::int64_t c = 0; c < data.num_classes(); ++c) {
        std::vector<std::int64_t> pool;
        for (const auto idx : perm)
            if (data.label(idx) == c) pool.push_back(idx);
        append_split(out, pool);
    }
    return out;
}

ordered_json split_manifest(const Splits& splits) {
    return {{"train", splits.train.indices},
            {"val", splits.val.indices},
            {"test", splits.test.indices}};
}

Splits splits_from_manifest(const Dataset& data, const json& manifest) {
    Splits out;
    out.train.data = out.val.data = out.test.data = &data;
    for (const char* key : {"train", "val", "test"})
        if (!manifest.contains(key))
            throw DataError(std::string("split manifest missing '") + key + "'");
    auto read = [&](const char* key, DatasetView& view) {
        for (const auto& v : manifest.at(key)) {
            const auto idx = v.get<std::int64_t>();
            if (idx < 0 || idx >= data.size())
                throw DataError("split manifest index out of range");
            view.indices.push_back(idx);
        }
    };
    read("train", out.train);
    read("val", out.val);
    read("test", out.test);
    return out;
}

BatchStream::BatchStream(const DatasetView& view, std::int64_t batch_size,
                         std::uint64_t epoch_seed)
    : view_(&view), order_(view.indices), batch_size_(batch_size) {
    if (batch_size < 1) throw ConfigError("batch: size must be >= 1");
    Rng rng(epoch_seed);
    rng.shuffle(order_);
}

std::int64_t BatchStream::batch_count() const {
    const auto n = static_cast<std::int64_t>(order_.size());
    return (n + batch_size_ - 1) / batch_size_;
}

bool BatchStream::next(Batch& out) {
    const auto n = static_cast<std::int64_t>(order_.size());
    if (cursor_ >= n) return false;
    const std::int64_t take = std::min(batch_size_, n - cursor_);
    out.indices.assign(order_.begin() + cursor_, order_.begin() + cursor_ + take);
    out.labels.resize(static_cast<std::size_t>(take));
    for (std::int64_t k = 0; k < take; ++k)
        out.labels[static_cast<std::size_t>(k)] =
            view_->data->label(out.indices[static_cast<std::size_t>(k)]);
    cursor_ += take;
    return true;
}

SnrPartition partition_by_snr(const DatasetView& view, const std::vector<double>& edges) {
    if (edges.size() < 2) throw ConfigError("snr bins: need at least two edges");
    for (std::size_t k = 1; k < edges.size(); ++k)
        if (!(edges[k] > edges[k - 1]))
            throw ConfigError("snr bins: edges must be strictly ascending");

    SnrPartition part;
    part.bins.resize(edges.size() - 1);
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        part.bins[k].lo = edges[k];
        part.bins[k].hi = edges[k + 1];
    }
    for (const auto idx : view.indices) {
        const double snr = view.data->snr_db(idx);
        const auto it = std::upper_bound(edges.begin(), edges.end(), snr);
        if (it == edges.begin() || it == edges.end()) {
            part.overflow.push_back(idx);
            continue;
        }
        part.bins[static_cast<std::size_t>(it - edges.begin() - 1)].indices.push_back(idx);
    }
    return part;
}

}  // namespace modrec
