#include "pvdis/hi_encoder.hpp"

#include <string>

#include "pvdis/error.hpp"

namespace pvdis::hi {

void HIConfig::validate(Index t) const {
    if (kernel_sizes.empty()) throw ConfigError("hi: kernel_sizes must not be empty");
    if (embed_dim < 1) throw ConfigError("hi: embed_dim must be >= 1");
    Index prev = 0;
    for (Index k : kernel_sizes) {
        if (k < 1 || k > t) {
            throw ConfigError("hi: kernel size " + std::to_string(k) + " outside [1, " +
                              std::to_string(t) + "]");
        }
        if (k <= prev) throw ConfigError("hi: kernel_sizes must be strictly increasing");
        prev = k;
    }
    for (Index h : mlp_hidden) {
        if (h < 1) throw ConfigError("hi: hidden widths must be >= 1");
    }
}

HIParams init_params(const HIConfig& cfg, Index t, rng::Engine& eng) {
    cfg.validate(t);
    HIParams params;
    for (Index k : cfg.kernel_sizes) {
        std::vector<Index> widths;
        widths.push_back((t + k - 1) / k);
        widths.insert(widths.end(), cfg.mlp_hidden.begin(), cfg.mlp_hidden.end());
        widths.push_back(cfg.embed_dim);
        params.scale_mlps.push_back(nn::make_mlp(widths, eng));
    }
    // a_s starts at 1/S so the initial embedding is the mean over scales
    const double init = 1.0 / static_cast<double>(cfg.scales());
    for (Index s = 0; s < cfg.scales(); ++s) {
        params.scale_weights.push_back(Matrix::Constant(1, 1, init));
    }
    return params;
}

Vector hi_subsample(const Vector& load, Index k) {
    return ad::maxpool1d(ad::leaf(load), k)->value.col(0);
}

Vector hi_coefficients(const Vector& subsampled, const nn::Mlp& f_s) {
    if (subsampled.size() != f_s.in_dim()) {
        throw ShapeError("hi_coefficients: series length " + std::to_string(subsampled.size()) +
                         " does not match MLP input width " + std::to_string(f_s.in_dim()));
    }
    return nn::eval(f_s, subsampled);
}

Vector hi_embed(const Vector& load, const HIConfig& cfg, const HIParams& params) {
    return embed_graph(ad::leaf(load), cfg, bind(params))->value.col(0);
}

HIBound bind(const HIParams& params) {
    HIBound bound;
    for (const nn::Mlp& mlp : params.scale_mlps) bound.mlps.push_back(nn::bind(mlp));
    for (const Matrix& a : params.scale_weights) bound.weights.push_back(ad::leaf(a));
    return bound;
}

ad::NodePtr embed_graph(const ad::NodePtr& load, const HIConfig& cfg, const HIBound& bound) {
    if (bound.mlps.size() != cfg.kernel_sizes.size() ||
        bound.weights.size() != cfg.kernel_sizes.size()) {
        throw ConfigError("hi: parameter count does not match kernel_sizes");
    }
    ad::NodePtr embed;
    for (std::size_t s = 0; s < cfg.kernel_sizes.size(); ++s) {
        const ad::NodePtr sub = ad::maxpool1d(load, cfg.kernel_sizes[s]);
        const ad::NodePtr theta = nn::apply(bound.mlps[s], sub);
        const ad::NodePtr weighted = ad::scale(bound.weights[s], theta);
        embed = embed ? ad::add(embed, weighted) : weighted;
    }
    return embed;
}

} // namespace pvdis::hi
