#include "modrec/metrics.hpp"

#include <chrono>
#include <sstream>
#include <unordered_map>

#include "modrec/errors.hpp"
#include "modrec/threading.hpp"

namespace modrec {

using nlohmann::ordered_json;

ConfusionMatrix::ConfusionMatrix(std::int64_t classes) : classes_(classes) {
    if (classes < 1) throw ConfigError("confusion: need at least one class");
    counts_.assign(static_cast<std::size_t>(classes * classes), 0);
}

void ConfusionMatrix::add(int actual, int predicted) {
    if (actual < 0 || actual >= classes_ || predicted < 0 || predicted >= classes_)
        throw DataError("confusion: label pair (" + std::to_string(actual) + ", " +
                        std::to_string(predicted) + ") outside " +
                        std::to_string(classes_) + " classes");
    ++counts_[static_cast<std::size_t>(actual * classes_ + predicted)];
}

std::int64_t ConfusionMatrix::at(std::int64_t actual, std::int64_t predicted) const {
    return counts_[static_cast<std::size_t>(actual * classes_ + predicted)];
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (const auto v : counts_) t += v;
    return t;
}

std::int64_t ConfusionMatrix::row_sum(std::int64_t actual) const {
    std::int64_t t = 0;
    for (std::int64_t j = 0; j < classes_; ++j) t += at(actual, j);
    return t;
}

std::int64_t ConfusionMatrix::col_sum(std::int64_t predicted) const {
    std::int64_t t = 0;
    for (std::int64_t i = 0; i < classes_; ++i) t += at(i, predicted);
    return t;
}

double ConfusionMatrix::accuracy() const {
    const std::int64_t n = total();
    if (n == 0) return 0.0;
    std::int64_t correct = 0;
    for (std::int64_t i = 0; i < classes_; ++i) correct += at(i, i);
    return static_cast<double>(correct) / static_cast<double>(n);
}

std::vector<double> ConfusionMatrix::per_class_f1() const {
    std::vector<double> f1(static_cast<std::size_t>(classes_), 0.0);
    for (std::int64_t c = 0; c < classes_; ++c) {
        const auto tp = static_cast<double>(at(c, c));
        const auto actual = static_cast<double>(row_sum(c));
        const auto predicted = static_cast<double>(col_sum(c));
        const double precision = predicted > 0.0 ? tp / predicted : 0.0;
        const double recall = actual > 0.0 ? tp / actual : 0.0;
        if (precision + recall > 0.0)
            f1[static_cast<std::size_t>(c)] = 2.0 * precision * recall / (precision + recall);
    }
    return f1;
}

double ConfusionMatrix::macro_f1() const {
    const auto f1 = per_class_f1();
    double acc = 0.0;
    for (const double v : f1) acc += v;
    return acc / static_cast<double>(classes_);
}

ordered_json EvalReport::to_json() const {
    ordered_json conf = ordered_json::array();
    for (std::int64_t i = 0; i < confusion.classes(); ++i) {
        ordered_json row = ordered_json::array();
        for (std::int64_t j = 0; j < confusion.classes(); ++j) row.push_back(confusion.at(i, j));
        conf.push_back(row);
    }
    ordered_json bins = ordered_json::array();
    for (const auto& b : per_snr)
        bins.push_back({{"lo", b.lo},
                        {"hi", b.hi},
                        {"count", b.count},
                        {"correct", b.correct},
                        {"accuracy", b.accuracy()}});
    return {{"classes", class_names},
            {"frames", frames},
            {"accuracy", accuracy},
            {"macro_f1", macro_f1},
            {"confusion", conf},
            {"per_snr", bins},
            {"snr_overflow", {{"count", snr_overflow.count}, {"correct", snr_overflow.correct}}},
            {"parameter_count", parameter_count}};
}

std::string EvalReport::confusion_csv() const {
    std::ostringstream out;
    out << "actual\\predicted";
    for (const auto& name : class_names) out << ',' << name;
    out << '\n';
    for (std::int64_t i = 0; i < confusion.classes(); ++i) {
        out << class_names[static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < confusion.classes(); ++j) out << ',' << confusion.at(i, j);
        out << '\n';
    }
    return out.str();
}

std::string EvalReport::snr_accuracy_csv() const {
    std::ostringstream out;
    out << "snr_lo,snr_hi,count,correct,accuracy\n";
    for (const auto& b : per_snr)
        out << b.lo << ',' << b.hi << ',' << b.count << ',' << b.correct << ','
            << b.accuracy() << '\n';
    return out.str();
}

void frame_to_double(const Dataset& data, std::int64_t idx, std::vector<double>& i,
                     std::vector<double>& q) {
    const std::int64_t n = data.frame_len();
    i.resize(static_cast<std::size_t>(n));
    q.resize(static_cast<std::size_t>(n));
    const float* fi = data.frame_i(idx);
    const float* fq = data.frame_q(idx);
    for (std::int64_t t = 0; t < n; ++t) {
        i[static_cast<std::size_t>(t)] = fi[t];
        q[static_cast<std::size_t>(t)] = fq[t];
    }
}

EvalReport evaluate(const Model& model, const DatasetView& view,
                    const std::vector<double>& snr_edges) {
    if (view.data == nullptr) throw ContractError("evaluate: view has no dataset");
    const Dataset& data = *view.data;
    if (model.config().n != data.frame_len())
        throw ConfigError("evaluate: model expects n=" + std::to_string(model.config().n) +
                          " but dataset frames have n=" + std::to_string(data.frame_len()));
    if (model.config().num_classes != data.num_classes())
        throw ConfigError("evaluate: model has " + std::to_string(model.config().num_classes) +
                          " classes but dataset has " + std::to_string(data.num_classes()));

    const auto start = std::chrono::steady_clock::now();
    std::vector<int> preds(static_cast<std::size_t>(view.size()));
    parallel_for(0, view.size(), [&](std::int64_t k) {
        std::vector<double> bi, bq;
        frame_to_double(data, view.indices[static_cast<std::size_t>(k)], bi, bq);
        preds[static_cast<std::size_t>(k)] = model.predict(bi.data(), bq.data());
    });

    EvalReport report;
    report.class_names = data.class_names();
    report.confusion = ConfusionMatrix(data.num_classes());
    report.frames = view.size();
    report.parameter_count = count_parameters(model.config()).total;

    for (std::int64_t k = 0; k < view.size(); ++k)
        report.confusion.add(data.label(view.indices[static_cast<std::size_t>(k)]),
                             preds[static_cast<std::size_t>(k)]);
    report.accuracy = report.confusion.accuracy();
    report.macro_f1 = report.confusion.macro_f1();

    if (snr_edges.size() >= 2) {
        const SnrPartition part = partition_by_snr(view, snr_edges);
        // The partition indexes records; map them back to prediction slots.
        std::unordered_map<std::int64_t, std::size_t> slot;
        for (std::int64_t k = 0; k < view.size(); ++k)
            slot[view.indices[static_cast<std::size_t>(k)]] = static_cast<std::size_t>(k);
        auto tally = [&](const std::vector<std::int64_t>& members, SnrBinStat& stat) {
            for (const auto idx : members) {
                ++stat.count;
                if (preds[slot[idx]] == data.label(idx)) ++stat.correct;
            }
        };
        for (const auto& bin : part.bins) {
            SnrBinStat stat;
            stat.lo = bin.lo;
            stat.hi = bin.hi;
            tally(bin.indices, stat);
            report.per_snr.push_back(stat);
        }
        tally(part.overflow, report.snr_overflow);
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace modrec
