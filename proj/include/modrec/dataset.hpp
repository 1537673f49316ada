#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "modrec/rng.hpp"
#include "modrec/tensor.hpp"

namespace modrec {

/// In-memory view of a generated dataset file: the JSON header line plus all
/// records decoded into flat arrays.
class Dataset {
  public:
    static Dataset load(const std::string& path);

    std::int64_t size() const { return frames_; }
    std::int64_t frame_len() const { return n_; }
    std::int64_t num_classes() const { return static_cast<std::int64_t>(class_names_.size()); }
    const std::vector<std::string>& class_names() const { return class_names_; }
    const nlohmann::ordered_json& header() const { return header_; }

    const float* frame_i(std::int64_t idx) const { return iq_.data() + idx * 2 * n_; }
    const float* frame_q(std::int64_t idx) const { return iq_.data() + idx * 2 * n_ + n_; }
    int label(std::int64_t idx) const { return labels_[static_cast<std::size_t>(idx)]; }
    float snr_db(std::int64_t idx) const { return snrs_[static_cast<std::size_t>(idx)]; }

  private:
    nlohmann::ordered_json header_;
    std::int64_t n_ = 0;
    std::int64_t frames_ = 0;
    std::vector<std::string> class_names_;
    std::vector<float> iq_;  // per frame: n I samples then n Q samples
    std::vector<unsigned char> labels_;
    std::vector<float> snrs_;
};

/// An ordered subset of dataset records.
struct DatasetView {
    const Dataset* data = nullptr;
    std::vector<std::int64_t> indices;

    std::int64_t size() const { return static_cast<std::int64_t>(indices.size()); }
};

struct Splits {
    DatasetView train, val, test;
};

/// Seeded random 60/20/20 partition with largest-remainder rounding, so each
/// split size deviates from the exact fraction by less than one record.
/// `stratified` applies the same rule per class (useful at desk scale).
Splits split_dataset(const Dataset& data, std::uint64_t seed, bool stratified = false);

/// Serializable record of a split for later exact reuse.
nlohmann::ordered_json split_manifest(const Splits& splits);
Splits splits_from_manifest(const Dataset& data, const nlohmann::json& manifest);

struct Batch {
    std::vector<std::int64_t> indices;  // dataset record indices
    std::vector<int> labels;
};

/// Shuffles a view with an epoch-derived seed and yields fixed-size batches;
/// the final batch may be short.
class BatchStream {
  public:
    BatchStream(const DatasetView& view, std::int64_t batch_size, std::uint64_t epoch_seed);
    bool next(Batch& out);
    std::int64_t batch_count() const;

  private:
    const DatasetView* view_;
    std::vector<std::int64_t> order_;
    std::int64_t batch_size_;
    std::int64_t cursor_ = 0;
};

struct SnrBin {
    double lo = 0.0, hi = 0.0;  // [lo, hi)
    std::vector<std::int64_t> indices;
};

struct SnrPartition {
    std::vector<SnrBin> bins;
    std::vector<std::int64_t> overflow;  // records outside every bin
};

/// Buckets view records by SNR into [edges[k], edges[k+1]) bins; edges must
/// be strictly ascending.
SnrPartition partition_by_snr(const DatasetView& view, const std::vector<double>& edges);

}  // namespace modrec
