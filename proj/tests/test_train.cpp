#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "modrec/checkpoint.hpp"
#include "modrec/errors.hpp"
#include "modrec/framegen.hpp"
#include "modrec/train.hpp"
#include "testutil.hpp"

using namespace modrec;

namespace {

std::filesystem::path work_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "modrec-tests";
    std::filesystem::create_directories(dir);
    return dir;
}

// 20 easy frames: BPSK vs QPSK, clean channel, high SNR.
std::string train_data_path() {
    static std::string path;
    if (!path.empty()) return path;
    path = (work_dir() / "train-easy.bin").string();
    DatasetSpec spec;
    spec.n = 64;
    spec.frames = 20;
    spec.classes = {ModulationScheme::BPSK, ModulationScheme::QPSK};
    spec.snr = SnrSpec::grid(20.0, 20.0, 1.0);
    spec.seed = 1234;
    generate_dataset(spec, path);
    return path;
}

ModelConfig trainable_config(double dropout) {
    ModelConfig cfg;
    cfg.tokenizer.strategy = TokenStrategy::Direct;
    cfg.tokenizer.l = 8;
    cfg.n = 64;
    cfg.num_layers = 2;
    cfg.num_heads = 2;
    cfg.ffn_dim = 24;
    cfg.classifier_hidden = 12;
    cfg.dropout = dropout;
    cfg.num_classes = 2;
    return cfg;
}

// Views hold a pointer to `data`, so this type must stay where it was built.
struct TrainSetup {
    Dataset data;
    DatasetView train_view;
    DatasetView val_view;

    TrainSetup() : data(Dataset::load(train_data_path())) {
        train_view.data = val_view.data = &data;
        for (std::int64_t k = 0; k < 16; ++k) train_view.indices.push_back(k);
        for (std::int64_t k = 16; k < 20; ++k) val_view.indices.push_back(k);
    }
    TrainSetup(const TrainSetup&) = delete;
    TrainSetup& operator=(const TrainSetup&) = delete;
};

}  // namespace

TEST_CASE("an overfit probe memorizes a tiny batch") {
    const TrainSetup setup;
    DatasetView probe_view{&setup.data, {0, 1, 2, 3, 4, 5, 6, 7}};
    Model model(trainable_config(0.0), 7);
    TrainConfig cfg;
    cfg.lr = 1e-3;
    cfg.seed = 1;
    const ProbeResult result = overfit_probe(model, probe_view, 400, 1.0, cfg);
    CHECK(result.steps_to_target > 0);
    CHECK(result.final_accuracy == 1.0);
    REQUIRE(result.step_losses.size() >= 2);
    CHECK(result.step_losses.back() < result.step_losses.front());
    CHECK(result.step_losses.size() == result.step_accuracies.size());
}

TEST_CASE("training reduces the loss on a learnable problem") {
    TrainSetup setup;
    Model model(trainable_config(0.1), 13);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 8;
    cfg.seed = 2;
    const TrainResult result = train(model, setup.train_view, setup.val_view, cfg, "");
    REQUIRE(result.history.size() == 4);
    CHECK(result.resolved_lr == 1e-3);  // picked by token size l=8
    CHECK(result.first_batch_loss > 0.2);
    CHECK(result.first_batch_loss < 1.5);
    CHECK(result.history.back().train_loss < result.history.front().train_loss);
    CHECK(result.best_epoch >= 1);
    CHECK(result.best_epoch <= 4);
    for (const auto& e : result.history) {
        CHECK(e.val_loss > 0.0);
        CHECK(e.val_accuracy >= 0.0);
        CHECK(e.val_accuracy <= 1.0);
        CHECK(e.val_macro_f1 >= 0.0);
        CHECK(e.val_macro_f1 <= 1.0);
    }
}

TEST_CASE("training histories are bitwise reproducible") {
    auto run = [&]() {
        TrainSetup setup;
        Model model(trainable_config(0.1), 21);
        TrainConfig cfg;
        cfg.epochs = 2;
        cfg.batch_size = 8;
        cfg.seed = 3;
        return train(model, setup.train_view, setup.val_view, cfg, "");
    };
    const TrainResult a = run();
    const TrainResult b = run();
    CHECK(a.first_batch_loss == b.first_batch_loss);
    CHECK(a.history_json().dump() == b.history_json().dump());
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) {
        CHECK(a.history[e].train_loss == b.history[e].train_loss);
        CHECK(a.history[e].val_loss == b.history[e].val_loss);
    }
}

TEST_CASE("non-finite losses abort with a training error") {
    TrainSetup setup;
    Model model(trainable_config(0.0), 5);
    // Poison the output layer: an inf logit turns the very first batch loss
    // into NaN. (Earlier layers won't do — the classifier ReLU squashes a
    // NaN hidden row back to zeros.)
    model.params().at("classifier.b2").data()[0] =
        std::numeric_limits<double>::infinity();
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 8;
    CHECK_THROWS_AS(train(model, setup.train_view, setup.val_view, cfg, ""), TrainingError);
}

TEST_CASE("checkpoint cadence writes snapshots plus the best model") {
    TrainSetup setup;
    const auto out_dir = work_dir() / "train-ckpts";
    std::filesystem::remove_all(out_dir);
    std::filesystem::create_directories(out_dir);

    Model model(trainable_config(0.1), 31);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 8;
    cfg.seed = 4;
    cfg.checkpoint_every = 2;
    train(model, setup.train_view, setup.val_view, cfg, out_dir.string());

    CHECK(std::filesystem::exists(out_dir / "best.ckpt"));
    CHECK(std::filesystem::exists(out_dir / "epoch-0002.ckpt"));
    CHECK(std::filesystem::exists(out_dir / "epoch-0004.ckpt"));
    CHECK(!std::filesystem::exists(out_dir / "epoch-0001.ckpt"));

    const Checkpoint best = load_checkpoint((out_dir / "best.ckpt").string());
    Model restored(ModelConfig::from_json(best.model_config), 99);
    restore_parameters(restored.params(), best);
    std::vector<double> bi, bq;
    frame_to_double(setup.data, 0, bi, bq);
    const int pred = restored.predict(bi.data(), bq.data());
    CHECK(pred >= 0);
    CHECK(pred < 2);
}

TEST_CASE("patience stops training once validation goes stale") {
    TrainSetup setup;
    Model model(trainable_config(0.0), 41);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = 8;
    cfg.seed = 5;
    cfg.lr = 1e-12;  // updates too small to move any prediction
    cfg.patience = 2;
    const TrainResult result = train(model, setup.train_view, setup.val_view, cfg, "");
    CHECK(result.stopped_early);
    CHECK(result.best_epoch == 1);
    CHECK(result.history.size() == 3);  // epochs 2 and 3 never improve
}

TEST_CASE("mean_loss equals the manual per-frame average") {
    TrainSetup setup;
    const Model model(trainable_config(0.0), 51);
    const double reported = mean_loss(model, setup.val_view);
    double manual = 0.0;
    std::vector<double> bi, bq;
    for (const auto idx : setup.val_view.indices) {
        NoGradGuard guard;
        frame_to_double(setup.data, idx, bi, bq);
        const Tensor out = model.logits(bi.data(), bq.data(), false, nullptr);
        manual += cross_entropy(out, {setup.data.label(idx)}).item();
    }
    manual /= static_cast<double>(setup.val_view.size());
    CHECK(reported == manual);
}

TEST_CASE("train configs validate and round trip") {
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.lr = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    TrainConfig full;
    full.epochs = 7;
    full.batch_size = 32;
    full.lr = 5e-4;
    full.seed = 99;
    full.checkpoint_every = 3;
    full.patience = 4;
    const TrainConfig back = TrainConfig::from_json(full.to_json());
    CHECK(back.epochs == 7);
    CHECK(back.batch_size == 32);
    CHECK(back.lr == 5e-4);
    CHECK(back.seed == 99);
    CHECK(back.checkpoint_every == 3);
    CHECK(back.patience == 4);
}
