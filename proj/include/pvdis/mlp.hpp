#pragma once

#include <vector>

#include "pvdis/graph.hpp"
#include "pvdis/rng.hpp"
#include "pvdis/types.hpp"

namespace pvdis::nn {

/// One affine layer y = w*x + b acting on column vectors.
struct Dense {
    Matrix w;
    Matrix b;
};

/// Feed-forward stack: ReLU on hidden layers, linear output.
struct Mlp {
    std::vector<Dense> layers;

    Index in_dim() const { return layers.front().w.cols(); }
    Index out_dim() const { return layers.back().w.rows(); }
};

/// Glorot-uniform entries in +-sqrt(6/(fan_in+fan_out)), drawn in row-major
/// order so initialization is a pure function of the engine state.
void glorot_fill(Matrix& m, Index fan_in, Index fan_out, rng::Engine& eng);

/// Builds an MLP for the given widths (input, hidden..., output); weights
/// Glorot-uniform, biases zero.
Mlp make_mlp(const std::vector<Index>& widths, rng::Engine& eng);

struct DenseNodes {
    ad::NodePtr w;
    ad::NodePtr b;
};

/// Per-graph leaf nodes for every layer of an Mlp.
struct MlpNodes {
    std::vector<DenseNodes> layers;
};

MlpNodes bind(const Mlp& mlp);

/// Applies the stack to a column-vector node.
ad::NodePtr apply(const MlpNodes& mlp, ad::NodePtr x);

/// Plain evaluation (no gradients kept).
Vector eval(const Mlp& mlp, const Vector& x);

} // namespace pvdis::nn
