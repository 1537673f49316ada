#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "modrec/errors.hpp"
#include "modrec/framegen.hpp"
#include "modrec/metrics.hpp"
#include "modrec/presets.hpp"
#include "testutil.hpp"

using namespace modrec;

namespace {

// Macro F1 straight from the definition, with the score-0 convention for
// classes whose precision and recall are both empty.
double brute_force_macro_f1(const ConfusionMatrix& m) {
    double total = 0.0;
    for (std::int64_t c = 0; c < m.classes(); ++c) {
        double tp = 0.0, fp = 0.0, fn = 0.0;
        for (std::int64_t other = 0; other < m.classes(); ++other) {
            if (other == c) {
                tp = static_cast<double>(m.at(c, c));
            } else {
                fn += static_cast<double>(m.at(c, other));
                fp += static_cast<double>(m.at(other, c));
            }
        }
        const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
        const double recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
        if (precision + recall > 0.0) total += 2.0 * precision * recall / (precision + recall);
    }
    return total / static_cast<double>(m.classes());
}

ConfusionMatrix random_matrix(Rng& rng, std::int64_t classes, bool with_holes) {
    ConfusionMatrix m(classes);
    const std::int64_t skip = with_holes ? static_cast<std::int64_t>(rng.below(
                                               static_cast<std::uint64_t>(classes)))
                                         : -1;
    const int entries = 200;
    for (int e = 0; e < entries; ++e) {
        const auto a = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
        const auto p = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
        if (a == skip || p == skip) continue;
        m.add(a, p);
    }
    return m;
}

std::string metrics_data_path() {
    const auto dir = std::filesystem::temp_directory_path() / "modrec-tests";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "metrics-eval.bin").string();
    DatasetSpec spec;
    spec.n = 64;
    spec.frames = 12;
    spec.classes = {ModulationScheme::BPSK, ModulationScheme::QPSK};
    spec.snr = SnrSpec::grid(0.0, 10.0, 10.0);
    spec.seed = 404;
    generate_dataset(spec, path);
    return path;
}

ModelConfig eval_model_config() {
    ModelConfig cfg;
    cfg.tokenizer.strategy = TokenStrategy::Direct;
    cfg.tokenizer.l = 8;
    cfg.n = 64;
    cfg.num_layers = 1;
    cfg.num_heads = 2;
    cfg.ffn_dim = 16;
    cfg.classifier_hidden = 8;
    cfg.dropout = 0.0;
    cfg.num_classes = 2;
    return cfg;
}

}  // namespace

TEST_CASE("confusion counting identities hold") {
    Rng rng(61);
    ConfusionMatrix m = random_matrix(rng, 5, false);
    std::int64_t trace = 0, total = 0;
    for (std::int64_t i = 0; i < 5; ++i) {
        trace += m.at(i, i);
        std::int64_t row = 0, col = 0;
        for (std::int64_t j = 0; j < 5; ++j) {
            row += m.at(i, j);
            col += m.at(j, i);
            total += m.at(i, j);
        }
        CHECK(m.row_sum(i) == row);
        CHECK(m.col_sum(i) == col);
    }
    CHECK(m.total() == total);
    CHECK(m.accuracy() ==
          doctest::Approx(static_cast<double>(trace) / static_cast<double>(total))
              .epsilon(1e-15));
}

TEST_CASE("macro F1 matches a brute-force computation on random matrices") {
    Rng rng(62);
    for (int trial = 0; trial < 50; ++trial) {
        ConfusionMatrix m = random_matrix(rng, 8, trial % 2 == 1);
        CHECK(std::abs(m.macro_f1() - brute_force_macro_f1(m)) < 1e-12);
    }
}

TEST_CASE("classes with no mass score zero F1") {
    ConfusionMatrix m(3);
    m.add(0, 0);
    m.add(0, 0);
    m.add(1, 0);
    const auto f1 = m.per_class_f1();
    CHECK(f1[2] == 0.0);  // class 2 never appears
    CHECK(f1[1] == 0.0);  // predicted never, recall 0, precision undefined
    // Class 0: precision 2/3, recall 1 -> F1 = 0.8.
    CHECK(f1[0] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(m.macro_f1() == doctest::Approx(0.8 / 3.0).epsilon(1e-12));
    CHECK(ConfusionMatrix(2).accuracy() == 0.0);
    CHECK(ConfusionMatrix(2).macro_f1() == 0.0);
}

TEST_CASE("confusion rejects out-of-range labels") {
    ConfusionMatrix m(4);
    CHECK_THROWS_AS(m.add(0, 4), DataError);
    CHECK_THROWS_AS(m.add(-1, 0), DataError);
    CHECK_THROWS_AS(ConfusionMatrix(0), ConfigError);
}

TEST_CASE("evaluate agrees with a manual prediction loop") {
    const auto path = metrics_data_path();
    const Dataset data = Dataset::load(path);
    DatasetView view{&data, {}};
    for (std::int64_t k = 0; k < data.size(); ++k) view.indices.push_back(k);

    const Model model(eval_model_config(), 987);
    const std::vector<double> edges = {-5.0, 5.0, 15.0};
    const EvalReport report = evaluate(model, view, edges);

    ConfusionMatrix manual(data.num_classes());
    SnrBinStat low, high;
    std::vector<double> bi, bq;
    for (const auto idx : view.indices) {
        frame_to_double(data, idx, bi, bq);
        const int pred = model.predict(bi.data(), bq.data());
        manual.add(data.label(idx), pred);
        SnrBinStat& bin = data.snr_db(idx) < 5.0 ? low : high;
        ++bin.count;
        if (pred == data.label(idx)) ++bin.correct;
    }

    CHECK(report.frames == data.size());
    CHECK(report.accuracy == manual.accuracy());
    CHECK(report.macro_f1 == manual.macro_f1());
    for (std::int64_t i = 0; i < manual.classes(); ++i)
        for (std::int64_t j = 0; j < manual.classes(); ++j)
            CHECK(report.confusion.at(i, j) == manual.at(i, j));
    REQUIRE(report.per_snr.size() == 2);
    CHECK(report.per_snr[0].count == low.count);
    CHECK(report.per_snr[0].correct == low.correct);
    CHECK(report.per_snr[1].count == high.count);
    CHECK(report.per_snr[1].correct == high.correct);
    CHECK(report.snr_overflow.count == 0);
    CHECK(report.parameter_count == count_parameters(model.config()).total);

    // The weighted average of per-bin accuracies recovers the overall rate.
    double weighted = 0.0;
    for (const auto& b : report.per_snr)
        weighted += b.accuracy() * static_cast<double>(b.count);
    weighted /= static_cast<double>(report.frames);
    CHECK(weighted == doctest::Approx(report.accuracy).epsilon(1e-12));
}

TEST_CASE("evaluate validates model/dataset geometry") {
    const auto path = metrics_data_path();
    const Dataset data = Dataset::load(path);
    DatasetView view{&data, {0, 1, 2}};

    auto wrong_n = eval_model_config();
    wrong_n.n = 128;
    CHECK_THROWS_AS(evaluate(Model(wrong_n, 1), view, {}), ConfigError);

    auto wrong_classes = eval_model_config();
    wrong_classes.num_classes = 3;
    CHECK_THROWS_AS(evaluate(Model(wrong_classes, 1), view, {}), ConfigError);
}

TEST_CASE("evaluation reports are deterministic byte for byte") {
    const auto path = metrics_data_path();
    const Dataset data = Dataset::load(path);
    DatasetView view{&data, {0, 1, 2, 3, 4, 5}};
    const Model model(eval_model_config(), 55);
    const auto a = evaluate(model, view, {-5.0, 15.0}).to_json().dump(2);
    const auto b = evaluate(model, view, {-5.0, 15.0}).to_json().dump(2);
    CHECK(a == b);

    const auto j = evaluate(model, view, {-5.0, 15.0}).to_json();
    for (const char* key : {"classes", "frames", "accuracy", "macro_f1", "confusion",
                            "per_snr", "snr_overflow", "parameter_count"})
        CHECK_MESSAGE(j.contains(key), "missing key ", key);
    CHECK(!j.contains("wall_seconds"));  // timing would break reproducibility
}

TEST_CASE("CSV outputs carry headers and one row per class or bin") {
    const auto path = metrics_data_path();
    const Dataset data = Dataset::load(path);
    DatasetView view{&data, {0, 1, 2, 3}};
    const Model model(eval_model_config(), 55);
    const EvalReport report = evaluate(model, view, {-5.0, 5.0, 15.0});

    const std::string conf_csv = report.confusion_csv();
    CHECK(conf_csv.rfind("actual\\predicted,bpsk,qpsk\n", 0) == 0);
    CHECK(std::count(conf_csv.begin(), conf_csv.end(), '\n') == 3);  // header + 2 classes

    const std::string snr_csv = report.snr_accuracy_csv();
    CHECK(snr_csv.rfind("snr_lo,snr_hi,count,correct,accuracy\n", 0) == 0);
    CHECK(std::count(snr_csv.begin(), snr_csv.end(), '\n') == 3);  // header + 2 bins
}
