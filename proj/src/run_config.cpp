#include "pvdis/run_config.hpp"

#include <vector>

#include "pvdis/error.hpp"
#include "pvdis/text.hpp"

namespace pvdis::cli {

namespace {

std::vector<Index> parse_index_list(const std::string& value, const std::string& key) {
    std::vector<Index> out;
    for (std::string_view part : text::split(value, ',')) {
        out.push_back(text::parse_long(text::trim(part), key));
    }
    return out;
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "on" || value == "true" || value == "1") return true;
    if (value == "off" || value == "false" || value == "0") return false;
    throw ConfigError(key + ": expected on/off, got '" + value + "'");
}

std::string index_list_to_string(const std::vector<Index>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

} // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "hi.kernel_sizes") hi.kernel_sizes = parse_index_list(value, key);
    else if (key == "hi.hidden") hi.mlp_hidden = parse_index_list(value, key);
    else if (key == "hi.embed_dim") hi.embed_dim = text::parse_long(value, key);
    else if (key == "attn.heads") attn.heads = text::parse_long(value, key);
    else if (key == "attn.head_dim") attn.head_dim = text::parse_long(value, key);
    else if (key == "attn.model_dim") attn.model_dim = text::parse_long(value, key);
    else if (key == "attn.hidden") attn.out_hidden = parse_index_list(value, key);
    else if (key == "pred.hidden") pred.hidden = parse_index_list(value, key);
    else if (key == "train.learning_rate") train.learning_rate = text::parse_double(value, key);
    else if (key == "train.epochs") train.epochs = static_cast<int>(text::parse_long(value, key));
    else if (key == "train.batch_size") train.batch_size = static_cast<int>(text::parse_long(value, key));
    else if (key == "train.seed") train.seed = static_cast<std::uint64_t>(text::parse_long(value, key));
    else if (key == "train.repeats") train.repeats = static_cast<int>(text::parse_long(value, key));
    else if (key == "train.beta1") train.beta1 = text::parse_double(value, key);
    else if (key == "train.beta2") train.beta2 = text::parse_double(value, key);
    else if (key == "train.epsilon") train.epsilon = text::parse_double(value, key);
    else if (key == "train.patience") train.patience = static_cast<int>(text::parse_long(value, key));
    else if (key == "train.val_fraction") train.val_fraction = text::parse_double(value, key);
    else if (key == "train.threads") train.threads = static_cast<int>(text::parse_long(value, key));
    else if (key == "data.p1_fraction") p1_fraction = text::parse_double(value, key);
    else if (key == "data.hemisphere") {
        if (value == "south") hemisphere = data::Hemisphere::South;
        else if (value == "north") hemisphere = data::Hemisphere::North;
        else throw ConfigError("data.hemisphere: expected south or north, got '" + value + "'");
    } else if (key == "data.percentile_filter") percentile_filter = parse_bool(value, key);
    else if (key == "data.filter_lo") filter_lo = text::parse_double(value, key);
    else if (key == "data.filter_hi") filter_hi = text::parse_double(value, key);
    else if (key == "eval.knn_k") knn_k = text::parse_long(value, key);
    else if (key == "eval.knn_auto_k") knn_auto_k = parse_bool(value, key);
    else throw ConfigError("unknown configuration key '" + key + "'");
}

void RunConfig::validate() const {
    hi.validate(kSlotsPerDay);
    attn.validate();
    for (Index h : pred.hidden) {
        if (h < 1) throw ConfigError("pred.hidden: widths must be >= 1");
    }
    train.validate();
    if (p1_fraction <= 0.0 || p1_fraction > 1.0) {
        throw ConfigError("data.p1_fraction must be in (0, 1]");
    }
    if (filter_lo < 0.0 || filter_hi > 100.0 || filter_lo >= filter_hi) {
        throw ConfigError("data.filter bounds must satisfy 0 <= lo < hi <= 100");
    }
    if (knn_k < 1) throw ConfigError("eval.knn_k must be >= 1");
}

std::string RunConfig::snapshot() const {
    std::string out;
    const auto kv = [&out](const std::string& k, const std::string& v) {
        out += k + " = " + v + "\n";
    };
    kv("hi.kernel_sizes", index_list_to_string(hi.kernel_sizes));
    kv("hi.hidden", index_list_to_string(hi.mlp_hidden));
    kv("hi.embed_dim", std::to_string(hi.embed_dim));
    kv("attn.heads", std::to_string(attn.heads));
    kv("attn.head_dim", std::to_string(attn.head_dim));
    kv("attn.model_dim", std::to_string(attn.model_dim));
    kv("attn.hidden", index_list_to_string(attn.out_hidden));
    kv("pred.hidden", index_list_to_string(pred.hidden));
    kv("train.learning_rate", text::format_double(train.learning_rate));
    kv("train.epochs", std::to_string(train.epochs));
    kv("train.batch_size", std::to_string(train.batch_size));
    kv("train.seed", std::to_string(train.seed));
    kv("train.repeats", std::to_string(train.repeats));
    kv("train.beta1", text::format_double(train.beta1));
    kv("train.beta2", text::format_double(train.beta2));
    kv("train.epsilon", text::format_double(train.epsilon));
    kv("train.patience", std::to_string(train.patience));
    kv("train.val_fraction", text::format_double(train.val_fraction));
    kv("train.threads", std::to_string(train.threads));
    kv("data.p1_fraction", text::format_double(p1_fraction));
    kv("data.hemisphere", hemisphere == data::Hemisphere::South ? "south" : "north");
    kv("data.percentile_filter", percentile_filter ? "on" : "off");
    kv("data.filter_lo", text::format_double(filter_lo));
    kv("data.filter_hi", text::format_double(filter_hi));
    kv("eval.knn_k", std::to_string(knn_k));
    kv("eval.knn_auto_k", knn_auto_k ? "on" : "off");
    return out;
}

RunConfig RunConfig::from_file(const std::string& path) {
    RunConfig cfg;
    cfg.apply_file(path);
    return cfg;
}

void RunConfig::apply_file(const std::string& path) {
    const std::string content = text::read_file(path);
    const auto lines = text::split(content, '\n');
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        const std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = text::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config " + path + " line " + std::to_string(i + 1) +
                              ": expected key = value");
        }
        const std::string key(text::trim(line.substr(0, eq)));
        const std::string value(text::trim(line.substr(eq + 1)));
        try {
            set(key, value);
        } catch (const Error& e) {
            throw ConfigError("config " + path + " line " + std::to_string(i + 1) + ": " +
                              e.what());
        }
    }
}

} // namespace pvdis::cli
