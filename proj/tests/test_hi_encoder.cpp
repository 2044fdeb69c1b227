#include <cmath>

#include <doctest.h>

#include "pvdis/error.hpp"
#include "pvdis/hi_encoder.hpp"
#include "support/gradcheck.hpp"

using namespace pvdis;
using testsupport::finite_diff_check;
using testsupport::random_matrix;

namespace {

Vector random_series(Index n, rng::Engine& eng) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = eng.uniform(-1.0, 1.0);
    return v;
}

// single linear layer with a chosen weight matrix
nn::Mlp linear_mlp(const Matrix& w) {
    nn::Mlp mlp;
    mlp.layers.push_back({w, Matrix::Zero(w.rows(), 1)});
    return mlp;
}

} // namespace

TEST_CASE("config validation") {
    hi::HIConfig cfg;
    cfg.validate(48);

    cfg.kernel_sizes = {2, 2};
    CHECK_THROWS_AS(cfg.validate(48), ConfigError);
    cfg.kernel_sizes = {4, 2};
    CHECK_THROWS_AS(cfg.validate(48), ConfigError);
    cfg.kernel_sizes = {1, 64};
    CHECK_THROWS_AS(cfg.validate(48), ConfigError);
    cfg.kernel_sizes = {1, 2};
    cfg.embed_dim = 0;
    CHECK_THROWS_AS(cfg.validate(48), ConfigError);
}

TEST_CASE("hi_subsample kernels") {
    rng::Engine eng(7);
    const Vector load = random_series(48, eng);
    CHECK(hi::hi_subsample(load, 1) == load);
    CHECK(hi::hi_subsample(load, 8).size() == 6);

    Vector spike = Vector::Zero(48);
    spike(21) = 5.0;
    const Vector pooled = hi::hi_subsample(spike, 4);
    REQUIRE(pooled.size() == 12);
    for (Index w = 0; w < pooled.size(); ++w) {
        CHECK(pooled(w) == (w == 21 / 4 ? 5.0 : 0.0));
    }
}

TEST_CASE("hi_coefficients") {
    rng::Engine eng(9);

    SUBCASE("zero network maps everything to zero") {
        nn::Mlp zero = nn::make_mlp({6, 5, 4}, eng);
        for (auto& layer : zero.layers) {
            layer.w.setZero();
            layer.b.setZero();
        }
        const Vector theta = hi::hi_coefficients(random_series(6, eng), zero);
        CHECK(theta.isZero(0.0));
    }

    SUBCASE("identity single layer echoes the input") {
        const nn::Mlp ident = linear_mlp(Matrix::Identity(6, 6));
        const Vector x = random_series(6, eng);
        CHECK(hi::hi_coefficients(x, ident) == x);
    }

    SUBCASE("matches an independent plain-loop evaluation") {
        const nn::Mlp mlp = nn::make_mlp({6, 8, 4}, eng);
        const Vector x = random_series(6, eng);
        Vector h(8);
        for (Index r = 0; r < 8; ++r) {
            double acc = mlp.layers[0].b(r, 0);
            for (Index c = 0; c < 6; ++c) acc += mlp.layers[0].w(r, c) * x(c);
            h(r) = std::max(acc, 0.0);
        }
        Vector expect(4);
        for (Index r = 0; r < 4; ++r) {
            double acc = mlp.layers[1].b(r, 0);
            for (Index c = 0; c < 8; ++c) acc += mlp.layers[1].w(r, c) * h(c);
            expect(r) = acc;
        }
        CHECK((hi::hi_coefficients(x, mlp) - expect).cwiseAbs().maxCoeff() <= 1e-12);
    }

    SUBCASE("width mismatch is a shape error") {
        const nn::Mlp mlp = nn::make_mlp({6, 4}, eng);
        CHECK_THROWS_AS(hi::hi_coefficients(random_series(5, eng), mlp), ShapeError);
    }
}

TEST_CASE("hi_embed combines scales") {
    rng::Engine eng(11);

    SUBCASE("single scale with unit weight is that scale's coefficients") {
        hi::HIConfig cfg;
        cfg.kernel_sizes = {1};
        cfg.mlp_hidden = {};
        cfg.embed_dim = 4;
        hi::HIParams params;
        Matrix w(4, 8);
        nn::glorot_fill(w, 8, 4, eng);
        params.scale_mlps.push_back(linear_mlp(w));
        params.scale_weights.push_back(Matrix::Constant(1, 1, 1.0));
        const Vector load = random_series(8, eng);
        CHECK(hi::hi_embed(load, cfg, params) == hi::hi_coefficients(load, params.scale_mlps[0]));
    }

    SUBCASE("all-zero scale weights give the zero embedding") {
        hi::HIConfig cfg;
        cfg.kernel_sizes = {1, 2};
        cfg.mlp_hidden = {5};
        cfg.embed_dim = 3;
        hi::HIParams params = hi::init_params(cfg, 12, eng);
        for (Matrix& a : params.scale_weights) a.setZero();
        CHECK(hi::hi_embed(random_series(12, eng), cfg, params).isZero(0.0));
    }

    SUBCASE("two scales with known weights match hand arithmetic") {
        hi::HIConfig cfg;
        cfg.kernel_sizes = {1, 2};
        cfg.mlp_hidden = {};
        cfg.embed_dim = 4;
        hi::HIParams params;
        Matrix w1(4, 8), w2(4, 4);
        nn::glorot_fill(w1, 8, 4, eng);
        nn::glorot_fill(w2, 4, 4, eng);
        params.scale_mlps.push_back(linear_mlp(w1));
        params.scale_mlps.push_back(linear_mlp(w2));
        params.scale_weights.push_back(Matrix::Constant(1, 1, 0.5));
        params.scale_weights.push_back(Matrix::Constant(1, 1, 2.0));

        const Vector load = random_series(8, eng);
        const Vector theta1 = hi::hi_coefficients(load, params.scale_mlps[0]);
        const Vector theta2 = hi::hi_coefficients(hi::hi_subsample(load, 2), params.scale_mlps[1]);
        const Vector expect = 0.5 * theta1 + 2.0 * theta2;
        CHECK((hi::hi_embed(load, cfg, params) - expect).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("embedding length is embed_dim for every valid kernel set") {
    rng::Engine eng(13);
    for (Index t : {5, 17, 48}) {
        for (std::vector<Index> kernels :
             {std::vector<Index>{1}, std::vector<Index>{1, 2, 3}, std::vector<Index>{2, 5}}) {
            hi::HIConfig cfg;
            cfg.kernel_sizes = kernels;
            cfg.mlp_hidden = {6};
            cfg.embed_dim = 7;
            const hi::HIParams params = hi::init_params(cfg, t, eng);
            CHECK(hi::hi_embed(random_series(t, eng), cfg, params).size() == 7);
        }
    }
}

TEST_CASE("hi_embed is linear in the scale weights") {
    rng::Engine eng(15);
    hi::HIConfig cfg;
    cfg.kernel_sizes = {1, 2, 4};
    cfg.mlp_hidden = {8};
    cfg.embed_dim = 5;
    hi::HIParams params = hi::init_params(cfg, 24, eng);
    for (Matrix& a : params.scale_weights) a(0, 0) = eng.uniform(-1.0, 1.0);
    const Vector load = random_series(24, eng);
    const Vector base = hi::hi_embed(load, cfg, params);
    hi::HIParams doubled = params;
    for (Matrix& a : doubled.scale_weights) a *= 2.0;
    CHECK(hi::hi_embed(load, cfg, doubled) == Vector(2.0 * base));
}

TEST_CASE("permuting scales together with their weights preserves the embedding") {
    rng::Engine eng(17);
    hi::HIConfig cfg;
    cfg.kernel_sizes = {1, 2, 4};
    cfg.mlp_hidden = {6};
    cfg.embed_dim = 5;
    hi::HIParams params = hi::init_params(cfg, 16, eng);
    for (Matrix& a : params.scale_weights) a(0, 0) = eng.uniform(0.5, 1.5);
    const Vector load = random_series(16, eng);
    const Vector base = hi::hi_embed(load, cfg, params);

    // swap scales 1 and 2 wholesale; kernel order stays valid only if the
    // kernels are swapped too, so build a fresh config
    hi::HIConfig swapped_cfg = cfg;
    std::swap(swapped_cfg.kernel_sizes[1], swapped_cfg.kernel_sizes[2]);
    hi::HIParams swapped = params;
    std::swap(swapped.scale_mlps[1], swapped.scale_mlps[2]);
    std::swap(swapped.scale_weights[1], swapped.scale_weights[2]);
    // bypass the strictly-increasing check: evaluate through the graph path
    const ad::NodePtr out =
        hi::embed_graph(ad::leaf(load), swapped_cfg, hi::bind(swapped));
    CHECK((out->value.col(0) - base).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("gradients through the load path match finite differences") {
    rng::Engine eng(19);
    hi::HIConfig cfg;
    cfg.kernel_sizes = {1, 3};
    cfg.mlp_hidden = {5};
    cfg.embed_dim = 4;
    const hi::HIParams params = hi::init_params(cfg, 10, eng);
    const Vector load = random_series(10, eng);
    const Vector target = random_series(4, eng);

    const hi::HIBound bound = hi::bind(params);
    const ad::NodePtr loss =
        ad::mse(hi::embed_graph(ad::leaf(load), cfg, bound), ad::leaf(target));
    ad::backward(loss);

    // every f_s weight and every a_s
    auto rebuild = [&](const hi::HIParams& p) {
        return ad::mse(hi::embed_graph(ad::leaf(load), cfg, hi::bind(p)), ad::leaf(target))
            ->value(0, 0);
    };
    for (std::size_t s = 0; s < params.scale_mlps.size(); ++s) {
        for (std::size_t l = 0; l < params.scale_mlps[s].layers.size(); ++l) {
            const auto res = finite_diff_check(
                {params.scale_mlps[s].layers[l].w},
                [&](const std::vector<Matrix>& in) {
                    hi::HIParams p = params;
                    p.scale_mlps[s].layers[l].w = in[0];
                    return rebuild(p);
                },
                {bound.mlps[s].layers[l].w->grad});
            CHECK(res.max_rel_err <= 1e-4);
        }
        const auto res = finite_diff_check(
            {params.scale_weights[s]},
            [&](const std::vector<Matrix>& in) {
                hi::HIParams p = params;
                p.scale_weights[s] = in[0];
                return rebuild(p);
            },
            {bound.weights[s]->grad});
        CHECK(res.max_rel_err <= 1e-4);
    }
}
