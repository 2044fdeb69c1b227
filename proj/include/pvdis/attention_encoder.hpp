#pragma once

#include <vector>

#include "pvdis/graph.hpp"
#include "pvdis/mlp.hpp"
#include "pvdis/rng.hpp"
#include "pvdis/types.hpp"

namespace pvdis::attn {

/// Multi-head scaled-dot-product self-attention over the irradiance day.
/// Tokens are the T time steps, each carrying the three irradiance
/// channels; cross-channel mixing happens inside the per-head projections.
struct AttentionConfig {
    Index heads = 4;
    Index head_dim = 16;
    Index model_dim = 64;
    std::vector<Index> out_hidden{128}; // hidden widths of the output MLP

    void validate() const;
};

/// One day of irradiance measurements, all length T, in W/m^2 before
/// normalization (raw values are nonnegative).
struct WeatherDay {
    Vector dni;
    Vector dhi;
    Vector ghi;

    void validate(Index t) const;
};

struct HeadParams {
    Matrix wq; // 3 x head_dim
    Matrix wk;
    Matrix wv;
};

struct AttentionParams {
    std::vector<HeadParams> heads;
    nn::Mlp out_proj; // f_O on the flattened T x (H * head_dim) head output
};

AttentionParams init_params(const AttentionConfig& cfg, Index t, rng::Engine& eng);

/// Row t = (dni_t, dhi_t, ghi_t): T tokens of 3 features.
Matrix tokenize_weather(const WeatherDay& w);

struct Qkv {
    Matrix q;
    Matrix k;
    Matrix v;
};

/// Row-wise linear projections of the token matrix for one head.
Qkv project_qkv(const Matrix& tokens, const HeadParams& head);

/// softmax(Q K^T / sqrt(d_h)) V; every output row is a convex combination
/// of V's rows.
Matrix attention_head(const Matrix& q, const Matrix& k, const Matrix& v);

/// Full weather embedding: heads evaluated independently, concatenated,
/// flattened over tokens, then mapped to model_dim by the output MLP.
Vector weather_embed(const WeatherDay& w, const AttentionConfig& cfg,
                     const AttentionParams& params);

struct HeadBound {
    ad::NodePtr wq;
    ad::NodePtr wk;
    ad::NodePtr wv;
};

struct AttnBound {
    std::vector<HeadBound> heads;
    nn::MlpNodes out_proj;
};

AttnBound bind(const AttentionParams& params);

ad::NodePtr head_graph(const ad::NodePtr& tokens, const HeadBound& head);

/// Differentiable embedding; `tokens` is a T x 3 node.
ad::NodePtr embed_graph(const ad::NodePtr& tokens, const AttentionConfig& cfg,
                        const AttnBound& bound);

} // namespace pvdis::attn
