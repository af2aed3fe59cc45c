#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "stegsage/dataset.hpp"
#include "stegsage/graph.hpp"
#include "stegsage/metrics.hpp"
#include "stegsage/model.hpp"

namespace stegsage {

/// Optimization knobs. `dropout` overrides the model config's own rate
/// so one file controls the whole run.
struct TrainConfig {
    double lr = 0.003;
    int batch = 32;
    int epochs = 150;
    double dropout = 0.3;
    std::uint64_t seed = 0;
    ModelConfig model;
    int report_every = 10;  // epoch callback cadence; the last epoch always reports

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;

    bool operator==(const EpochStats&) const = default;
};

struct TrainResult {
    ModelState final_state;
    ModelState best_state;  // highest validation accuracy; earliest epoch wins ties
    int best_epoch = -1;    // -1 when no epoch ran
    std::vector<EpochStats> history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Minibatch Adam over shuffled epochs: forward in train mode, mean
// cross-entropy, backward, step. Deterministic given cfg.seed; mutation
// is confined to one ParamStore on this thread. A non-finite loss aborts
// the run with the epoch and batch in the message.
TrainResult train(const std::vector<StreamGraph>& train_graphs,
                  const std::vector<StreamGraph>& val_graphs, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = nullptr);

// Same loop fed from a manifest's train and val splits.
TrainResult train(const DatasetManifest& manifest, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = nullptr);

// key=value lines ('#' starts a comment). Keys: lr, batch, epochs,
// dropout, seed, report_every, variant, hidden, model_seed. Unlisted keys
// are rejected; unlisted values keep their defaults. `variant` picks the
// base model layout before hidden/model_seed apply.
TrainConfig parse_train_config_text(const std::string& text);
TrainConfig parse_train_config(const std::string& path);

}  // namespace stegsage
