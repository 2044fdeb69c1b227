#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pvdis/attention_encoder.hpp"
#include "pvdis/data_pipeline.hpp"
#include "pvdis/hi_encoder.hpp"
#include "pvdis/types.hpp"

namespace pvdis::model {

/// All learnable weights of the disaggregation model.
struct ModelParams {
    hi::HIParams hi;
    attn::AttentionParams attn;
    nn::Mlp pred; // f_Pred on the fused embedding, 48-wide output
};

struct PredConfig {
    std::vector<Index> hidden{128};
};

/// Complete inference bundle: configs, weights, and the normalization
/// statistics the inputs were trained under.
struct Model {
    hi::HIConfig hi_cfg;
    attn::AttentionConfig attn_cfg;
    PredConfig pred_cfg;
    ModelParams params;
    data::NormStats norm;
};

ModelParams init_params(const hi::HIConfig& hi_cfg, const attn::AttentionConfig& attn_cfg,
                        const PredConfig& pred_cfg, std::uint64_t seed);

/// Visits every parameter matrix in a fixed canonical order with a stable
/// dotted name. The same order backs gradient flattening, the optimizer
/// state, and the checkpoint layout.
void for_each_param(ModelParams& params,
                    const std::function<void(const std::string&, Matrix&)>& fn);
void for_each_param(const ModelParams& params,
                    const std::function<void(const std::string&, const Matrix&)>& fn);

std::size_t param_count(const ModelParams& params); // number of matrices
std::size_t scalar_count(const ModelParams& params);

/// Per-graph leaf nodes for the whole parameter set; `flat` is aligned with
/// for_each_param order.
struct BoundModel {
    hi::HIBound hi;
    attn::AttnBound attn;
    nn::MlpNodes pred;
    std::vector<std::pair<std::string, ad::NodePtr>> flat;
};

BoundModel bind(const ModelParams& params);

struct Prediction {
    Vector ghat; // predicted PV generation, kWh per half-hour, >= 0
    std::string prosumer_id;
    data::Date date;
};

/// Joint representation: load embedding followed by weather embedding.
Vector fuse(const Vector& e_load, const Vector& e_weather);

/// Differentiable forward pass from normalized inputs to the 48-slot
/// prediction node (ReLU output, kWh).
ad::NodePtr prediction_graph(const ad::NodePtr& norm_load, const ad::NodePtr& norm_tokens,
                             const hi::HIConfig& hi_cfg, const attn::AttentionConfig& attn_cfg,
                             const BoundModel& bound);

/// Validates the sample, normalizes inputs with the model's stats, and runs
/// the forward pass. Deterministic; ground truth not required.
Prediction predict_day(const data::DailySample& sample, const Model& model);

double day_loss(const Prediction& pred, const Vector& truth);

/// Actual consumption implied by net load and predicted generation.
Vector consumption_from(const Vector& net_load, const Vector& ghat);

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

} // namespace pvdis::model
