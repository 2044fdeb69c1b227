#include "pvdis/mlp.hpp"

#include <cmath>
#include <string>

#include "pvdis/error.hpp"

namespace pvdis::nn {

void glorot_fill(Matrix& m, Index fan_in, Index fan_out, rng::Engine& eng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            m(r, c) = eng.uniform(-limit, limit);
        }
    }
}

Mlp make_mlp(const std::vector<Index>& widths, rng::Engine& eng) {
    if (widths.size() < 2) throw ConfigError("make_mlp: need at least input and output widths");
    Mlp mlp;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const Index in = widths[i];
        const Index out = widths[i + 1];
        if (in < 1 || out < 1) {
            throw ConfigError("make_mlp: layer widths must be >= 1, got " + std::to_string(in) +
                              " -> " + std::to_string(out));
        }
        Dense layer{Matrix(out, in), Matrix::Zero(out, 1)};
        glorot_fill(layer.w, in, out, eng);
        mlp.layers.push_back(std::move(layer));
    }
    return mlp;
}

MlpNodes bind(const Mlp& mlp) {
    MlpNodes nodes;
    nodes.layers.reserve(mlp.layers.size());
    for (const Dense& layer : mlp.layers) {
        nodes.layers.push_back({ad::leaf(layer.w), ad::leaf(layer.b)});
    }
    return nodes;
}

ad::NodePtr apply(const MlpNodes& mlp, ad::NodePtr x) {
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
        x = ad::add(ad::matmul(mlp.layers[i].w, x), mlp.layers[i].b);
        if (i + 1 < mlp.layers.size()) x = ad::relu(x);
    }
    return x;
}

Vector eval(const Mlp& mlp, const Vector& x) {
    return nn::apply(nn::bind(mlp), ad::leaf(x))->value.col(0);
}

} // namespace pvdis::nn
