#pragma once

#include <vector>

#include "pvdis/graph.hpp"
#include "pvdis/mlp.hpp"
#include "pvdis/rng.hpp"
#include "pvdis/types.hpp"

namespace pvdis::hi {

/// Multi-scale decomposition of the daily net-load series: each kernel size
/// subsamples the day at a coarser rate, a per-scale MLP turns the
/// subsampled series into a coefficient vector, and learned scale weights
/// combine the vectors into one load embedding.
struct HIConfig {
    std::vector<Index> kernel_sizes{1, 2, 4, 8};
    std::vector<Index> mlp_hidden{64, 64};
    Index embed_dim = 64;

    Index scales() const { return static_cast<Index>(kernel_sizes.size()); }

    /// Kernel sizes must be strictly increasing and within [1, t].
    void validate(Index t) const;
};

struct HIParams {
    std::vector<nn::Mlp> scale_mlps;    // f_s, one per kernel size
    std::vector<Matrix> scale_weights;  // a_s, one 1x1 matrix per scale
};

HIParams init_params(const HIConfig& cfg, Index t, rng::Engine& eng);

/// Windowed-max subsampling at kernel size k (stride k, ceil semantics).
Vector hi_subsample(const Vector& load, Index k);

/// Coefficient vector of one scale: the scale's MLP applied to the
/// subsampled series.
Vector hi_coefficients(const Vector& subsampled, const nn::Mlp& f_s);

/// Load embedding: weighted elementwise sum of per-scale coefficients.
Vector hi_embed(const Vector& load, const HIConfig& cfg, const HIParams& params);

struct HIBound {
    std::vector<nn::MlpNodes> mlps;
    std::vector<ad::NodePtr> weights;
};

HIBound bind(const HIParams& params);

/// Differentiable embedding over a bound parameter set; `load` is a T x 1
/// column node.
ad::NodePtr embed_graph(const ad::NodePtr& load, const HIConfig& cfg, const HIBound& bound);

} // namespace pvdis::hi
