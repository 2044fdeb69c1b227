#include "pvdis/fusion_model.hpp"


#include <json.hpp>

#include "pvdis/error.hpp"
#include "pvdis/text.hpp"

namespace pvdis::model {

namespace {

template <typename Params, typename Fn>
void visit_params(Params& params, Fn&& fn) {
    for (std::size_t s = 0; s < params.hi.scale_mlps.size(); ++s) {
        auto& mlp = params.hi.scale_mlps[s];
        for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
            const std::string base = "hi.mlp." + std::to_string(s) + ".layer." + std::to_string(l);
            fn(base + ".w", mlp.layers[l].w);
            fn(base + ".b", mlp.layers[l].b);
        }
    }
    for (std::size_t s = 0; s < params.hi.scale_weights.size(); ++s) {
        fn("hi.a." + std::to_string(s), params.hi.scale_weights[s]);
    }
    for (std::size_t h = 0; h < params.attn.heads.size(); ++h) {
        const std::string base = "attn.head." + std::to_string(h);
        fn(base + ".wq", params.attn.heads[h].wq);
        fn(base + ".wk", params.attn.heads[h].wk);
        fn(base + ".wv", params.attn.heads[h].wv);
    }
    for (std::size_t l = 0; l < params.attn.out_proj.layers.size(); ++l) {
        const std::string base = "attn.out.layer." + std::to_string(l);
        fn(base + ".w", params.attn.out_proj.layers[l].w);
        fn(base + ".b", params.attn.out_proj.layers[l].b);
    }
    for (std::size_t l = 0; l < params.pred.layers.size(); ++l) {
        const std::string base = "pred.layer." + std::to_string(l);
        fn(base + ".w", params.pred.layers[l].w);
        fn(base + ".b", params.pred.layers[l].b);
    }
}

} // namespace

ModelParams init_params(const hi::HIConfig& hi_cfg, const attn::AttentionConfig& attn_cfg,
                        const PredConfig& pred_cfg, std::uint64_t seed) {
    rng::Engine eng(rng::mix(seed, 7007));
    ModelParams params;
    params.hi = hi::init_params(hi_cfg, kSlotsPerDay, eng);
    params.attn = attn::init_params(attn_cfg, kSlotsPerDay, eng);
    std::vector<Index> widths;
    widths.push_back(hi_cfg.embed_dim + attn_cfg.model_dim);
    widths.insert(widths.end(), pred_cfg.hidden.begin(), pred_cfg.hidden.end());
    widths.push_back(kSlotsPerDay);
    params.pred = nn::make_mlp(widths, eng);
    return params;
}

void for_each_param(ModelParams& params,
                    const std::function<void(const std::string&, Matrix&)>& fn) {
    visit_params(params, fn);
}

void for_each_param(const ModelParams& params,
                    const std::function<void(const std::string&, const Matrix&)>& fn) {
    visit_params(params, fn);
}

std::size_t param_count(const ModelParams& params) {
    std::size_t n = 0;
    for_each_param(params, [&](const std::string&, const Matrix&) { ++n; });
    return n;
}

std::size_t scalar_count(const ModelParams& params) {
    std::size_t n = 0;
    for_each_param(params, [&](const std::string&, const Matrix& m) {
        n += static_cast<std::size_t>(m.size());
    });
    return n;
}

BoundModel bind(const ModelParams& params) {
    BoundModel bound;
    bound.hi = hi::bind(params.hi);
    bound.attn = attn::bind(params.attn);
    bound.pred = nn::bind(params.pred);

    // flat order mirrors for_each_param exactly (checked by tests)
    for (std::size_t s = 0; s < bound.hi.mlps.size(); ++s) {
        for (std::size_t l = 0; l < bound.hi.mlps[s].layers.size(); ++l) {
            const std::string base = "hi.mlp." + std::to_string(s) + ".layer." + std::to_string(l);
            bound.flat.emplace_back(base + ".w", bound.hi.mlps[s].layers[l].w);
            bound.flat.emplace_back(base + ".b", bound.hi.mlps[s].layers[l].b);
        }
    }
    for (std::size_t s = 0; s < bound.hi.weights.size(); ++s) {
        bound.flat.emplace_back("hi.a." + std::to_string(s), bound.hi.weights[s]);
    }
    for (std::size_t h = 0; h < bound.attn.heads.size(); ++h) {
        const std::string base = "attn.head." + std::to_string(h);
        bound.flat.emplace_back(base + ".wq", bound.attn.heads[h].wq);
        bound.flat.emplace_back(base + ".wk", bound.attn.heads[h].wk);
        bound.flat.emplace_back(base + ".wv", bound.attn.heads[h].wv);
    }
    for (std::size_t l = 0; l < bound.attn.out_proj.layers.size(); ++l) {
        const std::string base = "attn.out.layer." + std::to_string(l);
        bound.flat.emplace_back(base + ".w", bound.attn.out_proj.layers[l].w);
        bound.flat.emplace_back(base + ".b", bound.attn.out_proj.layers[l].b);
    }
    for (std::size_t l = 0; l < bound.pred.layers.size(); ++l) {
        const std::string base = "pred.layer." + std::to_string(l);
        bound.flat.emplace_back(base + ".w", bound.pred.layers[l].w);
        bound.flat.emplace_back(base + ".b", bound.pred.layers[l].b);
    }
    return bound;
}

Vector fuse(const Vector& e_load, const Vector& e_weather) {
    Vector out(e_load.size() + e_weather.size());
    out.head(e_load.size()) = e_load;
    out.tail(e_weather.size()) = e_weather;
    return out;
}

ad::NodePtr prediction_graph(const ad::NodePtr& norm_load, const ad::NodePtr& norm_tokens,
                             const hi::HIConfig& hi_cfg, const attn::AttentionConfig& attn_cfg,
                             const BoundModel& bound) {
    const ad::NodePtr e_load = hi::embed_graph(norm_load, hi_cfg, bound.hi);
    const ad::NodePtr e_weather = attn::embed_graph(norm_tokens, attn_cfg, bound.attn);
    const ad::NodePtr fused = ad::concat_rows({e_load, e_weather});
    return ad::relu(nn::apply(bound.pred, fused));
}

Prediction predict_day(const data::DailySample& sample, const Model& model) {
    sample.validate();
    const Vector norm_load = data::NormStats::apply(sample.net_load, model.norm.net_load);
    const Matrix tokens = attn::tokenize_weather(model.norm.apply_weather(sample.weather));
    const BoundModel bound = bind(model.params);
    const ad::NodePtr out = prediction_graph(ad::leaf(norm_load), ad::leaf(tokens),
                                             model.hi_cfg, model.attn_cfg, bound);
    return {out->value.col(0), sample.prosumer_id, sample.date};
}

double day_loss(const Prediction& pred, const Vector& truth) {
    if (pred.ghat.size() != truth.size()) {
        throw ShapeError("day_loss: prediction length " + std::to_string(pred.ghat.size()) +
                         " vs truth length " + std::to_string(truth.size()));
    }
    return (pred.ghat - truth).squaredNorm() / static_cast<double>(truth.size());
}

Vector consumption_from(const Vector& net_load, const Vector& ghat) {
    if (net_load.size() != ghat.size()) {
        throw ShapeError("consumption_from: lengths disagree: " +
                         std::to_string(net_load.size()) + " vs " + std::to_string(ghat.size()));
    }
    return net_load + ghat;
}

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> data(m.data(), m.data() + m.size());
    j["data"] = data; // row-major
    return j;
}

void matrix_from_json(const json& j, const std::string& name, Matrix& m) {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    if (rows != m.rows() || cols != m.cols()) {
        throw ParseError("checkpoint: parameter '" + name + "' has shape " +
                         std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    const auto& data = j.at("data");
    if (static_cast<Index>(data.size()) != m.size()) {
        throw ParseError("checkpoint: parameter '" + name + "' has " +
                         std::to_string(data.size()) + " values, expected " +
                         std::to_string(m.size()));
    }
    for (Index i = 0; i < m.size(); ++i) {
        m.data()[i] = data[static_cast<std::size_t>(i)].get<double>();
    }
}

json channel_to_json(const data::ChannelStats& c) {
    return json{{"mean", c.mean}, {"std", c.std}};
}

data::ChannelStats channel_from_json(const json& j) {
    return {j.at("mean").get<double>(), j.at("std").get<double>()};
}

template <typename T>
std::vector<T> index_list(const json& j) {
    return j.get<std::vector<T>>();
}

} // namespace

void save_checkpoint(const Model& model, const std::string& path) {
    json j;
    j["format"] = "pvdis-checkpoint";
    j["version"] = 1;
    j["hi_config"] = {{"kernel_sizes", model.hi_cfg.kernel_sizes},
                      {"mlp_hidden", model.hi_cfg.mlp_hidden},
                      {"embed_dim", model.hi_cfg.embed_dim}};
    j["attn_config"] = {{"heads", model.attn_cfg.heads},
                        {"head_dim", model.attn_cfg.head_dim},
                        {"model_dim", model.attn_cfg.model_dim},
                        {"out_hidden", model.attn_cfg.out_hidden}};
    j["pred_config"] = {{"hidden", model.pred_cfg.hidden}};
    j["norm"] = {{"net_load", channel_to_json(model.norm.net_load)},
                 {"dni", channel_to_json(model.norm.dni)},
                 {"dhi", channel_to_json(model.norm.dhi)},
                 {"ghi", channel_to_json(model.norm.ghi)}};
    json params = json::object();
    for_each_param(model.params, [&](const std::string& name, const Matrix& m) {
        params[name] = matrix_to_json(m);
    });
    j["params"] = std::move(params);
    text::write_file(path, j.dump(1) + "\n");
}

Model load_checkpoint(const std::string& path) {
    json j;
    try {
        j = json::parse(text::read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError("checkpoint " + path + ": " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "pvdis-checkpoint") {
            throw ParseError("checkpoint " + path + ": wrong format tag");
        }
        if (j.at("version").get<int>() != 1) {
            throw ParseError("checkpoint " + path + ": unsupported version");
        }
        Model model;
        const json& hc = j.at("hi_config");
        model.hi_cfg.kernel_sizes = index_list<Index>(hc.at("kernel_sizes"));
        model.hi_cfg.mlp_hidden = index_list<Index>(hc.at("mlp_hidden"));
        model.hi_cfg.embed_dim = hc.at("embed_dim").get<Index>();
        const json& ac = j.at("attn_config");
        model.attn_cfg.heads = ac.at("heads").get<Index>();
        model.attn_cfg.head_dim = ac.at("head_dim").get<Index>();
        model.attn_cfg.model_dim = ac.at("model_dim").get<Index>();
        model.attn_cfg.out_hidden = index_list<Index>(ac.at("out_hidden"));
        model.pred_cfg.hidden = index_list<Index>(j.at("pred_config").at("hidden"));
        const json& norm = j.at("norm");
        model.norm.net_load = channel_from_json(norm.at("net_load"));
        model.norm.dni = channel_from_json(norm.at("dni"));
        model.norm.dhi = channel_from_json(norm.at("dhi"));
        model.norm.ghi = channel_from_json(norm.at("ghi"));

        model.params = init_params(model.hi_cfg, model.attn_cfg, model.pred_cfg, 0);
        const json& params = j.at("params");
        std::size_t filled = 0;
        for_each_param(model.params, [&](const std::string& name, Matrix& m) {
            const auto it = params.find(name);
            if (it == params.end()) {
                throw ParseError("checkpoint " + path + ": missing parameter '" + name + "'");
            }
            matrix_from_json(*it, name, m);
            ++filled;
        });
        if (filled != params.size()) {
            throw ParseError("checkpoint " + path + ": unexpected extra parameters");
        }
        return model;
    } catch (const json::exception& e) {
        throw ParseError("checkpoint " + path + ": " + e.what());
    }
}

} // namespace pvdis::model
