#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pvdis/data_pipeline.hpp"
#include "pvdis/evaluation.hpp"
#include "pvdis/fusion_model.hpp"
#include "pvdis/types.hpp"

namespace pvdis::train {

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 100;
    int batch_size = 32;
    std::uint64_t seed = 1;
    int repeats = 5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int patience = 15;         // early stop after this many non-improving epochs
    double val_fraction = 0.1; // last fraction of training dates held out
    int threads = 1;

    void validate() const;
};

struct EpochStats {
    double train_loss = 0.0;
    double val_mae = 0.0;
    double val_rmse = 0.0;
    double seconds = 0.0; // wall clock, in-memory only; never serialized
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
};

/// Adam first/second moment estimates, aligned with for_each_param order.
struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    long step = 0;

    static AdamState init(const model::ModelParams& params);
};

/// One bias-corrected Adam update. Gradients carry their parameter names so
/// a non-finite gradient aborts with a message naming the group.
void adam_step(model::ModelParams& params,
               const std::vector<std::pair<std::string, Matrix>>& grads, AdamState& state,
               const TrainConfig& cfg);

/// Mean loss and mean named gradients over a set of samples. Work is split
/// into fixed chunks combined in index order, so results do not depend on
/// the thread count.
struct BatchResult {
    double mean_loss = 0.0;
    std::vector<double> sample_loss; // aligned with the input batch
    std::vector<std::pair<std::string, Matrix>> grads;
};

BatchResult compute_batch(const model::Model& model, const std::vector<const data::DailySample*>& batch,
                          int threads);

struct TrainResult {
    model::Model model; // best-validation-MAE parameters
    TrainHistory history;
    int best_epoch = 0; // 1-based
    std::vector<std::string> warnings;
};

/// Parameters exactly as train() starts from: seeded Glorot weights, zero
/// biases, except the prediction head's output bias, which starts at the
/// dataset's mean PV day so no ReLU output slot begins dead.
model::ModelParams initial_params(const data::Dataset& d1, const hi::HIConfig& hi_cfg,
                                  const attn::AttentionConfig& attn_cfg,
                                  const model::PredConfig& pred_cfg, std::uint64_t seed);

/// Supervised training on D1 (every sample must carry pv truth). The last
/// val_fraction of dates is held out for model selection; normalization
/// stats are fit on the remaining training slice and shipped in the model.
TrainResult train(const data::Dataset& d1, const hi::HIConfig& hi_cfg,
                  const attn::AttentionConfig& attn_cfg, const model::PredConfig& pred_cfg,
                  const TrainConfig& cfg);

struct RepeatedRuns {
    eval::SeasonReport report;              // mean/std over repeats
    std::vector<TrainHistory> histories;    // one per repeat
    std::vector<model::Model> models;       // one per repeat
    Index knn_k = 0;                        // k actually used
};

/// Trains with seeds seed+0 .. seed+(repeats-1), evaluates each run against
/// the test set alongside the KNN and slot-mean baselines, and aggregates
/// per-season metrics. knn_k = 0 selects k from {1,3,5,10} on the
/// validation slice.
RepeatedRuns repeated_runs(const data::Dataset& train_ds, const data::Dataset& test_ds,
                           const hi::HIConfig& hi_cfg, const attn::AttentionConfig& attn_cfg,
                           const model::PredConfig& pred_cfg, const TrainConfig& cfg,
                           data::Hemisphere hemisphere, Index knn_k = 0);

} // namespace pvdis::train
