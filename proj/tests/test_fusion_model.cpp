#include <cmath>
#include <cstring>
#include <vector>

#include <doctest.h>

#include "pvdis/error.hpp"
#include "pvdis/fusion_model.hpp"
#include "pvdis/text.hpp"
#include "support/gradcheck.hpp"
#include "support/tempdir.hpp"

using namespace pvdis;
using testsupport::TempDir;
using testsupport::finite_diff_check;

namespace {

model::Model small_model(std::uint64_t seed) {
    model::Model m;
    m.hi_cfg.kernel_sizes = {1, 4};
    m.hi_cfg.mlp_hidden = {10};
    m.hi_cfg.embed_dim = 6;
    m.attn_cfg.heads = 2;
    m.attn_cfg.head_dim = 3;
    m.attn_cfg.model_dim = 6;
    m.attn_cfg.out_hidden = {8};
    m.pred_cfg.hidden = {12};
    m.params = model::init_params(m.hi_cfg, m.attn_cfg, m.pred_cfg, seed);
    m.norm.net_load = {0.1, 0.8};
    m.norm.dni = {300.0, 200.0};
    m.norm.dhi = {120.0, 90.0};
    m.norm.ghi = {350.0, 250.0};
    return m;
}

data::DailySample sample_from_synth(std::uint64_t seed, std::size_t index = 0) {
    return data::synth_generate(2, 4, seed).dataset.samples.at(index);
}

// plain-Eigen re-evaluation of the full forward pass, no graph machinery
Vector straight_line_forward(const data::DailySample& s, const model::Model& m) {
    const Vector load = data::NormStats::apply(s.net_load, m.norm.net_load);
    const Matrix tokens = attn::tokenize_weather(m.norm.apply_weather(s.weather));

    auto run_mlp = [](const nn::Mlp& mlp, Vector x) {
        for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
            x = (mlp.layers[l].w * x + mlp.layers[l].b.col(0)).eval();
            if (l + 1 < mlp.layers.size()) x = x.cwiseMax(0.0);
        }
        return x;
    };

    Vector e_load = Vector::Zero(m.hi_cfg.embed_dim);
    for (std::size_t sc = 0; sc < m.hi_cfg.kernel_sizes.size(); ++sc) {
        const Index k = m.hi_cfg.kernel_sizes[sc];
        const Index out_n = (load.size() + k - 1) / k;
        Vector pooled(out_n);
        for (Index w = 0; w < out_n; ++w) {
            double best = load(w * k);
            for (Index i = w * k + 1; i < std::min(w * k + k, load.size()); ++i) {
                best = std::max(best, load(i));
            }
            pooled(w) = best;
        }
        e_load += m.params.hi.scale_weights[sc](0, 0) *
                  run_mlp(m.params.hi.scale_mlps[sc], pooled);
    }

    std::vector<Matrix> heads;
    for (const attn::HeadParams& head : m.params.attn.heads) {
        const Matrix q = tokens * head.wq;
        const Matrix k = tokens * head.wk;
        const Matrix v = tokens * head.wv;
        Matrix scores = q * k.transpose() / std::sqrt(static_cast<double>(q.cols()));
        for (Index i = 0; i < scores.rows(); ++i) {
            const double mx = scores.row(i).maxCoeff();
            scores.row(i) = (scores.row(i).array() - mx).exp();
            scores.row(i) /= scores.row(i).sum();
        }
        heads.push_back(scores * v);
    }
    const Index dh = m.attn_cfg.head_dim;
    Vector flat(tokens.rows() * m.attn_cfg.heads * dh);
    for (Index t = 0; t < tokens.rows(); ++t) {
        for (Index h = 0; h < m.attn_cfg.heads; ++h) {
            for (Index j = 0; j < dh; ++j) {
                flat(t * m.attn_cfg.heads * dh + h * dh + j) =
                    heads[static_cast<std::size_t>(h)](t, j);
            }
        }
    }
    const Vector e_weather = run_mlp(m.params.attn.out_proj, flat);

    Vector fused(e_load.size() + e_weather.size());
    fused << e_load, e_weather;
    return run_mlp(m.params.pred, fused).cwiseMax(0.0);
}

} // namespace

TEST_CASE("fuse concatenates load first") {
    rng::Engine eng(3);
    Vector a(4), b(3);
    for (Index i = 0; i < 4; ++i) a(i) = eng.uniform(-1, 1);
    for (Index i = 0; i < 3; ++i) b(i) = eng.uniform(-1, 1);

    const Vector fused = model::fuse(a, b);
    REQUIRE(fused.size() == 7);
    CHECK(fused.head(4) == a);
    CHECK(fused.tail(3) == b);

    const Vector zero_load = model::fuse(Vector::Zero(4), b);
    CHECK(zero_load.head(4).isZero(0.0));
    CHECK(zero_load.tail(3) == b);
}

TEST_CASE("predict_day output activation") {
    model::Model m = small_model(11);
    const data::DailySample s = sample_from_synth(5);

    SUBCASE("zero prediction head yields the all-zero no-PV prediction") {
        for (auto& layer : m.params.pred.layers) {
            layer.w.setZero();
            layer.b.setZero();
        }
        const model::Prediction pred = model::predict_day(s, m);
        CHECK(pred.ghat.isZero(0.0));
        CHECK(pred.ghat.size() == 48);
        CHECK(pred.prosumer_id == s.prosumer_id);
        CHECK(pred.date == s.date);
    }

    SUBCASE("negative output bias is clamped to zero") {
        for (auto& layer : m.params.pred.layers) {
            layer.w.setZero();
            layer.b.setZero();
        }
        m.params.pred.layers.back().b.setConstant(-3.0);
        CHECK(model::predict_day(s, m).ghat.isZero(0.0));
    }

    SUBCASE("predictions are nonnegative for random parameters") {
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            const model::Model rand_m = small_model(seed);
            CHECK(model::predict_day(s, rand_m).ghat.minCoeff() >= 0.0);
        }
    }
}

TEST_CASE("predict_day equals a straight-line re-evaluation") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const model::Model m = small_model(seed);
        const data::DailySample s = sample_from_synth(seed + 10, seed % 4);
        const Vector expect = straight_line_forward(s, m);
        const Vector got = model::predict_day(s, m).ghat;
        CHECK((got - expect).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("predict_day is deterministic") {
    const model::Model m = small_model(4);
    const data::DailySample s = sample_from_synth(6);
    const Vector a = model::predict_day(s, m).ghat;
    const Vector b = model::predict_day(s, m).ghat;
    CHECK(a == b);
}

TEST_CASE("predict_day validates the sample before computing") {
    const model::Model m = small_model(4);
    data::DailySample s = sample_from_synth(6);
    s.net_load = Vector::Zero(47);
    CHECK_THROWS_AS(model::predict_day(s, m), ValidationError);
}

TEST_CASE("day_loss") {
    const Vector truth = Vector::Constant(48, 0.5);
    model::Prediction perfect{truth, "p", {2011, 1, 1}};
    CHECK(model::day_loss(perfect, truth) == 0.0);

    model::Prediction zero{Vector::Zero(48), "p", {2011, 1, 1}};
    CHECK(model::day_loss(zero, truth) == doctest::Approx(0.25).epsilon(1e-12));

    // batch mean over two days with losses 1 and 3
    model::Prediction one{Vector::Constant(48, 1.0), "p", {2011, 1, 1}};
    const double l1 = model::day_loss(one, Vector::Zero(48));
    model::Prediction sq3{Vector::Constant(48, std::sqrt(3.0)), "p", {2011, 1, 1}};
    const double l3 = model::day_loss(sq3, Vector::Zero(48));
    CHECK(l1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(l3 == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(0.5 * (l1 + l3) == doctest::Approx(2.0).epsilon(1e-12));

    CHECK_THROWS_AS(model::day_loss(perfect, Vector::Zero(47)), ShapeError);
}

TEST_CASE("consumption_from") {
    Vector net(2), ghat(2);
    net << -1.0, 0.0;
    ghat << 2.0, 1.0;
    const Vector u = model::consumption_from(net, ghat);
    CHECK(u(0) == 1.0);
    CHECK(u(1) == 1.0);

    CHECK(model::consumption_from(net, Vector::Zero(2)) == net);
    CHECK_THROWS_AS(model::consumption_from(net, Vector::Zero(3)), ShapeError);

    // exact reconstruction on meter-grid values
    rng::Engine eng(8);
    Vector l(48), g(48);
    for (Index i = 0; i < 48; ++i) {
        l(i) = data::quantize_kwh(eng.uniform(-2.0, 2.0));
        g(i) = data::quantize_kwh(eng.uniform(0.0, 1.5));
    }
    const Vector cons = model::consumption_from(l, g);
    CHECK(Vector(cons - g) == l);
}

TEST_CASE("bound parameter order matches for_each_param order") {
    const model::Model m = small_model(9);
    std::vector<std::string> walk_names;
    model::for_each_param(m.params, [&](const std::string& name, const Matrix&) {
        walk_names.push_back(name);
    });
    const model::BoundModel bound = model::bind(m.params);
    REQUIRE(bound.flat.size() == walk_names.size());
    for (std::size_t i = 0; i < walk_names.size(); ++i) {
        CHECK(bound.flat[i].first == walk_names[i]);
    }
    CHECK(model::param_count(m.params) == walk_names.size());
}

TEST_CASE("full-model gradients match finite differences on sampled entries") {
    const model::Model m = small_model(13);
    const data::DailySample s = sample_from_synth(17);
    const Vector norm_load = data::NormStats::apply(s.net_load, m.norm.net_load);
    const Matrix tokens = attn::tokenize_weather(m.norm.apply_weather(s.weather));
    const Vector truth = *s.pv_truth;

    const model::BoundModel bound = model::bind(m.params);
    const ad::NodePtr loss =
        ad::mse(model::prediction_graph(ad::leaf(norm_load), ad::leaf(tokens), m.hi_cfg,
                                        m.attn_cfg, bound),
                ad::leaf(truth));
    ad::backward(loss);

    auto loss_with = [&](const model::ModelParams& p) {
        return ad::mse(model::prediction_graph(ad::leaf(norm_load), ad::leaf(tokens), m.hi_cfg,
                                               m.attn_cfg, model::bind(p)),
                       ad::leaf(truth))
            ->value(0, 0);
    };

    rng::Engine eng(23);
    std::size_t idx = 0;
    int checked_groups = 0;
    model::for_each_param(m.params, [&](const std::string& name, const Matrix& p) {
        const ad::NodePtr node = bound.flat[idx++].second;
        // 5 random entries per parameter group
        for (int rep = 0; rep < 5; ++rep) {
            const Index r = static_cast<Index>(eng.below(static_cast<std::uint64_t>(p.rows())));
            const Index c = static_cast<Index>(eng.below(static_cast<std::uint64_t>(p.cols())));
            const double step = 1e-5;
            model::ModelParams up = m.params;
            model::ModelParams down = m.params;
            std::size_t j = 0;
            model::for_each_param(up, [&](const std::string& n2, Matrix& m2) {
                if (n2 == name) m2(r, c) += step;
                ++j;
            });
            model::for_each_param(down, [&](const std::string& n2, Matrix& m2) {
                if (n2 == name) m2(r, c) -= step;
            });
            const double numeric = (loss_with(up) - loss_with(down)) / (2.0 * step);
            const double analytic = node->grad(r, c);
            if (std::abs(analytic) <= 1e-6 && std::abs(numeric) <= 1e-6) continue;
            const double rel =
                std::abs(analytic - numeric) / std::max(std::abs(analytic), std::abs(numeric));
            CHECK(rel <= 1e-4);
        }
        ++checked_groups;
    });
    CHECK(checked_groups == static_cast<int>(model::param_count(m.params)));
}

TEST_CASE("checkpoint round trip is bit-exact") {
    TempDir tmp;
    model::Model m = small_model(31);
    // adversarial values that expose lossy serialization
    m.params.hi.scale_weights[0](0, 0) = 1.0 / 3.0;
    m.params.hi.scale_weights[1](0, 0) = 1e-300;
    m.params.pred.layers[0].w(0, 0) = 0.1;
    m.norm.net_load = {0.1 + 0.2, 1.0 / 7.0};

    const std::string path = tmp.file("ckpt.json");
    model::save_checkpoint(m, path);
    const model::Model loaded = model::load_checkpoint(path);

    CHECK(loaded.hi_cfg.kernel_sizes == m.hi_cfg.kernel_sizes);
    CHECK(loaded.attn_cfg.heads == m.attn_cfg.heads);
    CHECK(loaded.pred_cfg.hidden == m.pred_cfg.hidden);
    CHECK(loaded.norm.net_load.mean == m.norm.net_load.mean);
    CHECK(loaded.norm.net_load.std == m.norm.net_load.std);

    std::vector<const Matrix*> original;
    model::for_each_param(m.params, [&](const std::string&, const Matrix& p) {
        original.push_back(&p);
    });
    std::size_t idx = 0;
    model::for_each_param(loaded.params, [&](const std::string&, const Matrix& p) {
        const Matrix& o = *original[idx++];
        REQUIRE(p.rows() == o.rows());
        REQUIRE(p.cols() == o.cols());
        CHECK(std::memcmp(p.data(), o.data(), sizeof(double) * p.size()) == 0);
    });

    // emitting the loaded model reproduces the file byte for byte
    const std::string path2 = tmp.file("ckpt2.json");
    model::save_checkpoint(loaded, path2);
    CHECK(text::read_file(path) == text::read_file(path2));
}

TEST_CASE("checkpoint loader rejects malformed files") {
    TempDir tmp;
    CHECK_THROWS_AS(model::load_checkpoint(tmp.write("bad.json", "{}")), ParseError);
    CHECK_THROWS_AS(model::load_checkpoint(tmp.write("junk.json", "not json")), ParseError);

    model::Model m = small_model(1);
    const std::string path = tmp.file("ok.json");
    model::save_checkpoint(m, path);
    std::string content = text::read_file(path);
    const std::size_t pos = content.find("hi.a.0");
    content.replace(pos, 6, "hi.a.9");
    CHECK_THROWS_AS(model::load_checkpoint(tmp.write("renamed.json", content)), ParseError);
}
