#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "modrec/dataset.hpp"
#include "modrec/model.hpp"

namespace modrec {

/// Row-is-actual, column-is-predicted count matrix.
class ConfusionMatrix {
  public:
    explicit ConfusionMatrix(std::int64_t classes);

    void add(int actual, int predicted);
    std::int64_t classes() const { return classes_; }
    std::int64_t at(std::int64_t actual, std::int64_t predicted) const;
    std::int64_t total() const;
    std::int64_t row_sum(std::int64_t actual) const;
    std::int64_t col_sum(std::int64_t predicted) const;

    double accuracy() const;  // trace / total, 0 when empty
    /// Per-class F1 with the 0-when-undefined convention: a class with zero
    /// precision+recall mass scores 0.
    std::vector<double> per_class_f1() const;
    /// Unweighted mean of per-class F1 over all classes.
    double macro_f1() const;

  private:
    std::int64_t classes_;
    std::vector<std::int64_t> counts_;
};

struct SnrBinStat {
    double lo = 0.0, hi = 0.0;
    std::int64_t count = 0;
    std::int64_t correct = 0;

    double accuracy() const { return count > 0 ? static_cast<double>(correct) / count : 0.0; }
};

struct EvalReport {
    std::vector<std::string> class_names;
    ConfusionMatrix confusion{1};
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::vector<SnrBinStat> per_snr;
    SnrBinStat snr_overflow;  // records outside the bin edges
    std::int64_t parameter_count = 0;
    std::int64_t frames = 0;
    double wall_seconds = 0.0;  // measurement only; excluded from stable JSON

    /// Deterministic report body: identical inputs give identical bytes.
    /// Timing lives outside so rerunning an evaluation reproduces the file.
    nlohmann::ordered_json to_json() const;
    std::string confusion_csv() const;
    std::string snr_accuracy_csv() const;
};

/// Evaluates eval-mode predictions over a view. `snr_edges` (strictly
/// ascending, possibly empty) select the per-SNR accuracy bins.
EvalReport evaluate(const Model& model, const DatasetView& view,
                    const std::vector<double>& snr_edges);

/// Copies one stored frame into double buffers sized to the frame length.
void frame_to_double(const Dataset& data, std::int64_t idx, std::vector<double>& i,
                     std::vector<double>& q);

}  // namespace modrec
