#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phaseseg/checkpoint.hpp"
#include "phaseseg/io.hpp"
#include "phaseseg/loss.hpp"
#include "phaseseg/metrics.hpp"
#include "phaseseg/model.hpp"

namespace phaseseg {

struct TrainConfig {
    double learning_rate = 5e-4;
    int epochs = 200;
    double lambda = 0.15;
    std::uint64_t seed = 0;
    int patience = 0;  // early stop after this many epochs without improvement; 0 = off

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;            // 1-based
    double train_loss = 0.0;  // mean per-video total loss
    double val_accuracy = 0.0;
    double val_edit = 0.0;
    double wall_seconds = 0.0;  // in-memory only, excluded from the CSV
};

struct TrainHistory {
    std::vector<EpochRecord> records;
    int best_epoch = 0;
};

struct LoadedVideo {
    std::string id;
    TensorPtr features;
    std::vector<int> labels;
};

// Loads every video of one split, checking the feature width against the
// model input. Width mismatches are configuration errors naming both dims.
std::vector<LoadedVideo> load_split(const Manifest& manifest, const std::string& split,
                                    int expected_dim);

struct TrainResult {
    Checkpoint best;  // parameters of the best validation epoch
    TrainHistory history;
};

// Full-video steps: forward over one entire video, loss summed over stages,
// backward, one Adam update. Validation metrics are computed each epoch on a
// float32-rounded copy of the parameters, so evaluating the saved checkpoint
// reproduces them. Deterministic for a fixed (seed, config, data).
TrainResult train(const TrainConfig& cfg, const Manifest& manifest, const ModelConfig& model_cfg);

struct EvalResult {
    std::vector<VideoMetrics> videos;
    AggregateMetrics aggregate;
    std::vector<std::vector<int>> predictions;  // aligned with videos
};

// Final-stage argmax predictions, scored per video.
EvalResult evaluate(const Model& model, const std::vector<LoadedVideo>& videos, int num_classes);
EvalResult evaluate_checkpoint(const Checkpoint& ckpt, const Manifest& manifest,
                               const std::string& split);

// epoch,train_loss,val_accuracy,val_edit rows; wall-clock is deliberately
// omitted so identical runs write identical bytes.
void save_history_csv(const TrainHistory& history, const std::string& path);
TrainHistory load_history_csv(const std::string& path);

}  // namespace phaseseg
