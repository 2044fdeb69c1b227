#pragma once

#include <string>

#include "pvdis/attention_encoder.hpp"
#include "pvdis/data_pipeline.hpp"
#include "pvdis/fusion_model.hpp"
#include "pvdis/hi_encoder.hpp"
#include "pvdis/training.hpp"

namespace pvdis::cli {

/// Merged view of every tunable surfaced by the CLI. Populated from a
/// key=value config file, then overridden by flags; unknown keys are
/// rejected. A canonical snapshot is written into every run directory.
struct RunConfig {
    hi::HIConfig hi;
    attn::AttentionConfig attn;
    model::PredConfig pred;
    train::TrainConfig train;

    double p1_fraction = 0.8;
    data::Hemisphere hemisphere = data::Hemisphere::South;
    bool percentile_filter = true;
    double filter_lo = 1.0;
    double filter_hi = 99.0;
    Index knn_k = 5;
    bool knn_auto_k = false;

    /// Applies one key=value assignment; throws ConfigError on unknown keys
    /// or unparsable values.
    void set(const std::string& key, const std::string& value);

    void validate() const;

    /// Canonical key=value rendering; parsing it back reproduces the config.
    std::string snapshot() const;

    /// Defaults overlaid with the file's assignments.
    static RunConfig from_file(const std::string& path);
    void apply_file(const std::string& path);
};

} // namespace pvdis::cli
