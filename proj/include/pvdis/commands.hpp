#pragma once

#include <cstdint>
#include <string>

#include "pvdis/run_config.hpp"

namespace pvdis::cli {

/// Subcommand bodies; each throws pvdis::Error on failure, writes data to
/// files or stdout and diagnostics to stderr. The CLI entry point maps
/// exceptions to a nonzero exit code.

/// Builds a canonical dataset from meter + weather CSVs. When `dataset_in`
/// names an existing canonical dataset (or `meter_csv` itself is one), the
/// file is re-emitted unchanged (passthrough mode).
void cmd_ingest(const RunConfig& cfg, const std::string& meter_csv,
                const std::string& weather_csv, const std::string& dataset_in,
                const std::string& out_path);

void cmd_synth(const RunConfig& cfg, int n_prosumers, int n_days, const std::string& out_path);

/// Trains on the dataset's Type-1 samples and writes config snapshot,
/// history CSV, and best checkpoint into out_dir.
void cmd_train(const RunConfig& cfg, const std::string& data_path, const std::string& out_dir);

/// Season report for a checkpoint on a test dataset with ground truth.
/// Baselines are included when the training dataset is supplied.
void cmd_eval(const RunConfig& cfg, const std::string& data_path, const std::string& checkpoint,
              const std::string& train_data_path, const std::string& out_dir);

/// Per-day predicted generation and derived consumption for (Type-2)
/// samples; output carries no truth columns.
void cmd_predict(const RunConfig& cfg, const std::string& data_path,
                 const std::string& checkpoint, const std::string& out_path);

/// Full repeated-runs protocol: trains `repeats` seeds, evaluates against
/// the baselines, writes the aggregated season report, and optionally a
/// two-day series CSV ("prosumer:YYYY-MM-DD").
void cmd_report(const RunConfig& cfg, const std::string& train_data_path,
                const std::string& test_data_path, const std::string& out_dir,
                const std::string& day_series);

} // namespace pvdis::cli
