#include "pvdis/attention_encoder.hpp"

#include <cmath>
#include <string>

#include "pvdis/error.hpp"

namespace pvdis::attn {

void AttentionConfig::validate() const {
    if (heads < 1) throw ConfigError("attn: heads must be >= 1");
    if (head_dim < 1) throw ConfigError("attn: head_dim must be >= 1");
    if (model_dim < 1) throw ConfigError("attn: model_dim must be >= 1");
    for (Index h : out_hidden) {
        if (h < 1) throw ConfigError("attn: hidden widths must be >= 1");
    }
}

void WeatherDay::validate(Index t) const {
    if (dni.size() != t || dhi.size() != t || ghi.size() != t) {
        throw ValidationError("weather day: expected three series of length " +
                              std::to_string(t) + ", got " + std::to_string(dni.size()) + "/" +
                              std::to_string(dhi.size()) + "/" + std::to_string(ghi.size()));
    }
}

AttentionParams init_params(const AttentionConfig& cfg, Index t, rng::Engine& eng) {
    cfg.validate();
    AttentionParams params;
    for (Index h = 0; h < cfg.heads; ++h) {
        HeadParams head{Matrix(3, cfg.head_dim), Matrix(3, cfg.head_dim), Matrix(3, cfg.head_dim)};
        nn::glorot_fill(head.wq, 3, cfg.head_dim, eng);
        nn::glorot_fill(head.wk, 3, cfg.head_dim, eng);
        nn::glorot_fill(head.wv, 3, cfg.head_dim, eng);
        params.heads.push_back(std::move(head));
    }
    std::vector<Index> widths;
    widths.push_back(t * cfg.heads * cfg.head_dim);
    widths.insert(widths.end(), cfg.out_hidden.begin(), cfg.out_hidden.end());
    widths.push_back(cfg.model_dim);
    params.out_proj = nn::make_mlp(widths, eng);
    return params;
}

Matrix tokenize_weather(const WeatherDay& w) {
    w.validate(w.dni.size());
    Matrix tokens(w.dni.size(), 3);
    tokens.col(0) = w.dni;
    tokens.col(1) = w.dhi;
    tokens.col(2) = w.ghi;
    return tokens;
}

Qkv project_qkv(const Matrix& tokens, const HeadParams& head) {
    if (tokens.cols() != head.wq.rows()) {
        throw ShapeError("project_qkv: token width " + std::to_string(tokens.cols()) +
                         " does not match projection input width " +
                         std::to_string(head.wq.rows()));
    }
    return {tokens * head.wq, tokens * head.wk, tokens * head.wv};
}

namespace {

ad::NodePtr attention_from_qkv(const ad::NodePtr& q, const ad::NodePtr& k,
                               const ad::NodePtr& v) {
    if (q->value.rows() != k->value.rows() || q->value.cols() != k->value.cols() ||
        q->value.rows() != v->value.rows() || q->value.cols() != v->value.cols()) {
        throw ShapeError("attention_head: Q/K/V shapes disagree");
    }
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(q->value.cols()));
    const ad::NodePtr scores = ad::scale_by(ad::matmul(q, ad::transpose(k)), inv_sqrt_dh);
    return ad::matmul(ad::softmax_rows(scores), v);
}

} // namespace

Matrix attention_head(const Matrix& q, const Matrix& k, const Matrix& v) {
    return attention_from_qkv(ad::leaf(q), ad::leaf(k), ad::leaf(v))->value;
}

Vector weather_embed(const WeatherDay& w, const AttentionConfig& cfg,
                     const AttentionParams& params) {
    return embed_graph(ad::leaf(Matrix(tokenize_weather(w))), cfg, bind(params))->value.col(0);
}

AttnBound bind(const AttentionParams& params) {
    AttnBound bound;
    for (const HeadParams& head : params.heads) {
        bound.heads.push_back({ad::leaf(head.wq), ad::leaf(head.wk), ad::leaf(head.wv)});
    }
    bound.out_proj = nn::bind(params.out_proj);
    return bound;
}

ad::NodePtr head_graph(const ad::NodePtr& tokens, const HeadBound& head) {
    const ad::NodePtr q = ad::matmul(tokens, head.wq);
    const ad::NodePtr k = ad::matmul(tokens, head.wk);
    const ad::NodePtr v = ad::matmul(tokens, head.wv);
    return attention_from_qkv(q, k, v);
}

ad::NodePtr embed_graph(const ad::NodePtr& tokens, const AttentionConfig& cfg,
                        const AttnBound& bound) {
    if (static_cast<Index>(bound.heads.size()) != cfg.heads) {
        throw ConfigError("attn: bound head count does not match config");
    }
    std::vector<ad::NodePtr> head_outputs;
    head_outputs.reserve(bound.heads.size());
    for (const HeadBound& head : bound.heads) {
        head_outputs.push_back(head_graph(tokens, head));
    }
    const ad::NodePtr joined = ad::concat_cols(head_outputs); // T x (H * d_h)
    const ad::NodePtr flat = ad::reshape(joined, joined->value.size(), 1);
    return nn::apply(bound.out_proj, flat);
}

} // namespace pvdis::attn
