#include "modrec/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "modrec/checkpoint.hpp"
#include "modrec/errors.hpp"
#include "modrec/threading.hpp"

namespace modrec {

using nlohmann::json;
using nlohmann::ordered_json;

double default_lr_for_token_size(std::int64_t l) { return l > 16 ? 1e-4 : 1e-3; }

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (lr < 0.0) throw ConfigError("train: lr must be >= 0 (0 = auto)");
    if (checkpoint_every < 0) throw ConfigError("train: checkpoint_every must be >= 0");
    if (patience < 0) throw ConfigError("train: patience must be >= 0");
}

ordered_json TrainConfig::to_json() const {
    return {{"epochs", epochs},
            {"batch_size", batch_size},
            {"lr", lr},
            {"seed", seed},
            {"checkpoint_every", checkpoint_every},
            {"patience", patience}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig cfg;
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
    cfg.patience = j.value("patience", cfg.patience);
    cfg.validate();
    return cfg;
}

ordered_json TrainResult::history_json() const {
    ordered_json rows = ordered_json::array();
    for (const auto& e : history)
        rows.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_loss", e.val_loss},
                        {"val_accuracy", e.val_accuracy},
                        {"val_macro_f1", e.val_macro_f1}});
    return {{"first_batch_loss", first_batch_loss},
            {"resolved_lr", resolved_lr},
            {"best_epoch", best_epoch},
            {"best_val_macro_f1", best_val_macro_f1},
            {"stopped_early", stopped_early},
            {"epochs", rows}};
}

double mean_loss(const Model& model, const DatasetView& view) {
    if (view.size() == 0) throw ContractError("mean_loss: empty view");
    const Dataset& data = *view.data;
    std::vector<double> losses(static_cast<std::size_t>(view.size()));
    parallel_for(0, view.size(), [&](std::int64_t k) {
        NoGradGuard guard;
        std::vector<double> bi, bq;
        const std::int64_t idx = view.indices[static_cast<std::size_t>(k)];
        frame_to_double(data, idx, bi, bq);
        const Tensor out = model.logits(bi.data(), bq.data(), false, nullptr);
        losses[static_cast<std::size_t>(k)] =
            cross_entropy(out, {data.label(idx)}).item();
    });
    double total = 0.0;
    for (const double v : losses) total += v;  // fixed order: thread-count independent
    return total / static_cast<double>(view.size());
}

namespace {

// Eval-mode loss and prediction for every record of a view in one pass.
void val_pass(const Model& model, const DatasetView& view, std::vector<double>& losses,
              std::vector<int>& preds) {
    const Dataset& data = *view.data;
    losses.resize(static_cast<std::size_t>(view.size()));
    preds.resize(static_cast<std::size_t>(view.size()));
    parallel_for(0, view.size(), [&](std::int64_t k) {
        NoGradGuard guard;
        std::vector<double> bi, bq;
        const std::int64_t idx = view.indices[static_cast<std::size_t>(k)];
        frame_to_double(data, idx, bi, bq);
        const Tensor out = model.logits(bi.data(), bq.data(), false, nullptr);
        losses[static_cast<std::size_t>(k)] = cross_entropy(out, {data.label(idx)}).item();
        const auto& v = out.data();
        preds[static_cast<std::size_t>(k)] =
            static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    });
}

// One optimization step over `indices`: accumulates mean-loss gradients
// frame by frame, then applies Adam. Returns the pre-update mean loss.
double fit_batch(Model& model, const Dataset& data, const std::vector<std::int64_t>& indices,
                 const std::vector<int>& labels, Adam& adam, Rng& dropout_rng,
                 double* accuracy_out) {
    model.params().zero_grad();
    const auto batch = static_cast<std::int64_t>(indices.size());
    const double inv_batch = 1.0 / static_cast<double>(batch);
    double loss_sum = 0.0;
    std::int64_t correct = 0;
    std::vector<double> bi, bq;
    for (std::int64_t k = 0; k < batch; ++k) {
        frame_to_double(data, indices[static_cast<std::size_t>(k)], bi, bq);
        const Tensor out = model.logits(bi.data(), bq.data(), true, &dropout_rng);
        const int label = labels[static_cast<std::size_t>(k)];
        const Tensor loss = cross_entropy(out, {label});
        loss_sum += loss.item();
        if (accuracy_out != nullptr) {
            const auto& v = out.data();
            const auto arg = static_cast<int>(
                std::max_element(v.begin(), v.end()) - v.begin());
            if (arg == label) ++correct;
        }
        backward(loss, inv_batch);
    }
    adam.step(model.params());
    if (accuracy_out != nullptr)
        *accuracy_out = static_cast<double>(correct) / static_cast<double>(batch);
    return loss_sum * inv_batch;
}

}  // namespace

TrainResult train(Model& model, const DatasetView& train_view, const DatasetView& val_view,
                  const TrainConfig& cfg, const std::string& out_dir,
                  const std::function<void(const EpochStats&)>& on_epoch) {
    cfg.validate();
    if (train_view.size() == 0) throw ConfigError("train: training split is empty");
    if (val_view.size() == 0) throw ConfigError("train: validation split is empty");
    const Dataset& data = *train_view.data;

    TrainResult result;
    result.resolved_lr =
        cfg.lr > 0.0 ? cfg.lr : default_lr_for_token_size(model.config().tokenizer.l);
    AdamConfig adam_cfg = cfg.adam;
    adam_cfg.lr = result.resolved_lr;
    Adam adam(adam_cfg);
    Rng dropout_rng(derive_seed(cfg.seed, 0xd60));

    for (std::int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        BatchStream batches(train_view, cfg.batch_size, derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        Batch batch;
        double loss_weighted = 0.0;
        bool first = epoch == 1;
        while (batches.next(batch)) {
            const double batch_loss =
                fit_batch(model, data, batch.indices, batch.labels, adam, dropout_rng, nullptr);
            if (!std::isfinite(batch_loss))
                throw TrainingError("training diverged: non-finite loss at epoch " +
                                    std::to_string(epoch));
            if (first) {
                result.first_batch_loss = batch_loss;
                first = false;
            }
            loss_weighted += batch_loss * static_cast<double>(batch.indices.size());
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_weighted / static_cast<double>(train_view.size());
        std::vector<double> val_losses;
        std::vector<int> val_preds;
        val_pass(model, val_view, val_losses, val_preds);
        double val_total = 0.0;
        for (const double v : val_losses) val_total += v;  // fixed order
        stats.val_loss = val_total / static_cast<double>(val_view.size());
        ConfusionMatrix val_conf(data.num_classes());
        for (std::int64_t k = 0; k < val_view.size(); ++k)
            val_conf.add(data.label(val_view.indices[static_cast<std::size_t>(k)]),
                         val_preds[static_cast<std::size_t>(k)]);
        stats.val_accuracy = val_conf.accuracy();
        stats.val_macro_f1 = val_conf.macro_f1();
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.history.push_back(stats);
        if (on_epoch) on_epoch(stats);

        if (result.best_epoch == 0 || stats.val_macro_f1 > result.best_val_macro_f1) {
            result.best_epoch = epoch;
            result.best_val_macro_f1 = stats.val_macro_f1;
            if (!out_dir.empty())
                save_checkpoint(out_dir + "/best.ckpt", model.config().to_json(),
                                model.params());
        }
        if (!out_dir.empty() && cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
            char name[32];
            std::snprintf(name, sizeof(name), "epoch-%04d.ckpt", static_cast<int>(epoch));
            save_checkpoint(out_dir + "/" + name, model.config().to_json(), model.params());
        }
        if (cfg.patience > 0 && epoch - result.best_epoch >= cfg.patience) {
            result.stopped_early = true;
            break;
        }
    }
    return result;
}

ProbeResult overfit_probe(Model& model, const DatasetView& view, std::int64_t max_steps,
                          double target_accuracy, const TrainConfig& cfg) {
    if (view.size() == 0) throw ConfigError("probe: view is empty");
    const Dataset& data = *view.data;
    std::vector<int> labels(static_cast<std::size_t>(view.size()));
    for (std::int64_t k = 0; k < view.size(); ++k)
        labels[static_cast<std::size_t>(k)] = data.label(view.indices[static_cast<std::size_t>(k)]);

    AdamConfig adam_cfg = cfg.adam;
    adam_cfg.lr = cfg.lr > 0.0 ? cfg.lr : default_lr_for_token_size(model.config().tokenizer.l);
    Adam adam(adam_cfg);
    Rng dropout_rng(derive_seed(cfg.seed, 0xd60));

    ProbeResult result;
    for (std::int64_t step = 1; step <= max_steps; ++step) {
        double acc = 0.0;
        const double loss =
            fit_batch(model, data, view.indices, labels, adam, dropout_rng, &acc);
        if (!std::isfinite(loss))
            throw TrainingError("probe diverged: non-finite loss at step " +
                                std::to_string(step));
        result.step_losses.push_back(loss);
        result.step_accuracies.push_back(acc);
        result.final_accuracy = acc;
        if (acc >= target_accuracy) {
            result.steps_to_target = step;
            break;
        }
    }
    return result;
}

}  // namespace modrec
