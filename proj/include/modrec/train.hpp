#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "modrec/dataset.hpp"
#include "modrec/metrics.hpp"
#include "modrec/model.hpp"
#include "modrec/params.hpp"

namespace modrec {

/// Learning rate by token size: 1e-3, dropping to 1e-4 for tokens wider
/// than 16 samples (the larger models need the gentler rate to converge).
double default_lr_for_token_size(std::int64_t l);

struct TrainConfig {
    std::int64_t epochs = 100;
    std::int64_t batch_size = 256;
    double lr = 0.0;  // 0 = pick by token size
    std::uint64_t seed = 0;
    std::int64_t checkpoint_every = 0;  // epochs between snapshots, 0 = off
    std::int64_t patience = 0;          // early stop after this many stale epochs, 0 = off
    AdamConfig adam;                    // lr field is overridden by the resolved rate

    void validate() const;
    nlohmann::ordered_json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochStats {
    std::int64_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double val_macro_f1 = 0.0;
    double seconds = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    double first_batch_loss = 0.0;  // mean loss of the first batch, before any update
    double resolved_lr = 0.0;
    std::int64_t best_epoch = 0;
    double best_val_macro_f1 = 0.0;
    bool stopped_early = false;

    nlohmann::ordered_json history_json() const;
};

/// Optimizes `model` on `train_view` and tracks the best validation
/// macro-F1. Batches run strictly sequentially, so the loss trace is a pure
/// function of (dataset bytes, model seed, train config). When `out_dir` is
/// non-empty, the best model is written to out_dir/best.ckpt (plus periodic
/// epoch-NNN.ckpt snapshots if configured). Non-finite loss aborts with
/// TrainingError. `on_epoch` (optional) observes per-epoch stats.
TrainResult train(Model& model, const DatasetView& train_view, const DatasetView& val_view,
                  const TrainConfig& cfg, const std::string& out_dir,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

/// Mean eval-mode cross-entropy over a view (no dropout, no graph).
double mean_loss(const Model& model, const DatasetView& view);

struct ProbeResult {
    std::vector<double> step_losses;      // full-batch mean loss per step, pre-update
    std::vector<double> step_accuracies;  // training-forward accuracy per step
    std::int64_t steps_to_target = -1;    // 1-based step reaching the target, -1 if none
    double final_accuracy = 0.0;
};

/// Memorization probe: repeatedly fits one fixed batch (the whole view) and
/// stops once training accuracy reaches `target_accuracy`. Exercises the
/// full optimizer path end to end at desk scale.
ProbeResult overfit_probe(Model& model, const DatasetView& view, std::int64_t max_steps,
                          double target_accuracy, const TrainConfig& cfg);

}  // namespace modrec
