#include "pvdis/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>

#include "pvdis/error.hpp"
#include "pvdis/evaluation.hpp"
#include "pvdis/text.hpp"
#include "pvdis/training.hpp"

namespace pvdis::cli {

namespace fs = std::filesystem;

namespace {

data::Dataset truth_samples(const data::Dataset& ds) {
    data::Dataset out;
    for (const data::DailySample& s : ds.samples) {
        if (s.pv_truth) out.samples.push_back(s);
    }
    return out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string history_csv(const train::TrainHistory& history) {
    std::string out = "epoch,train_loss,val_mae,val_rmse\n";
    for (std::size_t i = 0; i < history.epochs.size(); ++i) {
        const train::EpochStats& e = history.epochs[i];
        out += std::to_string(i + 1) + "," + text::format_double(e.train_loss) + "," +
               text::format_double(e.val_mae) + "," + text::format_double(e.val_rmse) + "\n";
    }
    return out;
}

std::vector<eval::Method> checkpoint_methods(const model::Model& model,
                                             const data::Dataset* train_ds, Index knn_k,
                                             std::vector<std::shared_ptr<void>>& keep_alive) {
    std::vector<eval::Method> methods;
    auto model_ptr = std::make_shared<model::Model>(model);
    keep_alive.push_back(model_ptr);
    methods.push_back({"Proposed", [model_ptr](const data::DailySample& s) {
                           return model::predict_day(s, *model_ptr).ghat;
                       }});
    if (train_ds != nullptr) {
        auto knn = std::make_shared<eval::KnnBaseline>(*train_ds, model.norm);
        keep_alive.push_back(knn);
        const Index k = std::min<Index>(knn_k, knn->size());
        methods.push_back(
            {"KNN", [knn, k](const data::DailySample& s) { return knn->predict(s, k); }});
        auto mean_day = std::make_shared<Vector>(eval::mean_baseline(*train_ds));
        keep_alive.push_back(mean_day);
        methods.push_back({"Mean", [mean_day](const data::DailySample&) { return *mean_day; }});
    }
    return methods;
}

} // namespace

void cmd_ingest(const RunConfig& cfg, const std::string& meter_csv,
                const std::string& weather_csv, const std::string& dataset_in,
                const std::string& out_path) {
    cfg.validate();
    std::string passthrough = dataset_in;
    if (passthrough.empty() && !meter_csv.empty() && data::is_dataset_file(meter_csv)) {
        passthrough = meter_csv;
    }
    if (!passthrough.empty()) {
        const data::Dataset ds = data::load_dataset(passthrough);
        data::save_dataset(ds, out_path);
        std::cout << "samples=" << ds.samples.size() << " (passthrough)\n";
        return;
    }
    if (meter_csv.empty() || weather_csv.empty()) {
        throw ConfigError("ingest: need --meter and --weather (or --dataset for passthrough)");
    }
    const std::vector<data::MeterRecord> meter = data::load_meter_csv(meter_csv);
    if (meter.empty()) {
        data::save_dataset({}, out_path);
        std::cout << "samples=0\n";
        return;
    }
    const data::WeatherTable weather = data::load_weather_csv(weather_csv);

    std::vector<std::string> ids;
    for (const data::MeterRecord& r : meter) ids.push_back(r.prosumer);
    const data::ProsumerSplit split = data::make_split(ids, cfg.p1_fraction, cfg.train.seed);

    data::AssembleOptions opts;
    opts.percentile_filter = cfg.percentile_filter;
    opts.filter_lo = cfg.filter_lo;
    opts.filter_hi = cfg.filter_hi;
    const data::AssembleResult result = data::assemble_days(meter, weather, split, opts);
    data::save_dataset(result.dataset, out_path);

    if (weather.days_dropped > 0) {
        std::cerr << "warning: " << weather.days_dropped
                  << " weather day(s) dropped (incomplete coverage)\n";
    }
    std::cout << "samples=" << result.dataset.samples.size()
              << " p1=" << split.p1.size() << " p2=" << split.p2.size()
              << " dropped_meter_days=" << result.days_dropped_meter
              << " dropped_weather_days=" << result.days_dropped_weather
              << " prosumers_filtered=" << result.prosumers_filtered.size() << "\n";
}

void cmd_synth(const RunConfig& cfg, int n_prosumers, int n_days, const std::string& out_path) {
    const data::SynthResult synth = data::synth_generate(n_prosumers, n_days, cfg.train.seed);
    data::save_dataset(synth.dataset, out_path);
    std::cout << "samples=" << synth.dataset.samples.size() << "\n";
}

void cmd_train(const RunConfig& cfg, const std::string& data_path, const std::string& out_dir) {
    cfg.validate();
    const data::Dataset d1 = truth_samples(data::load_dataset(data_path));
    if (d1.samples.empty()) {
        throw ConfigError("train: dataset has no Type-1 samples (pv truth required)");
    }
    const train::TrainResult result = train::train(d1, cfg.hi, cfg.attn, cfg.pred, cfg.train);
    for (const std::string& w : result.warnings) std::cerr << "warning: " << w << "\n";

    ensure_dir(out_dir);
    text::write_file(out_dir + "/config.txt", cfg.snapshot());
    text::write_file(out_dir + "/history.csv", history_csv(result.history));
    model::save_checkpoint(result.model, out_dir + "/checkpoint.json");
    std::cout << "epochs_run=" << result.history.epochs.size() << " best_epoch="
              << result.best_epoch << " best_val_mae="
              << text::format_double(
                     result.history.epochs[static_cast<std::size_t>(result.best_epoch - 1)].val_mae)
              << "\n";
}

void cmd_eval(const RunConfig& cfg, const std::string& data_path, const std::string& checkpoint,
              const std::string& train_data_path, const std::string& out_dir) {
    cfg.validate();
    const data::Dataset test = truth_samples(data::load_dataset(data_path));
    if (test.samples.empty()) {
        throw ConfigError(
            "eval: dataset has no ground truth; use the predict command for Type-2 data");
    }
    const model::Model model = model::load_checkpoint(checkpoint);

    data::Dataset train_ds;
    const bool with_baselines = !train_data_path.empty();
    if (with_baselines) {
        train_ds = truth_samples(data::load_dataset(train_data_path));
        if (train_ds.samples.empty()) {
            throw ConfigError("eval: training dataset has no Type-1 samples for baselines");
        }
    } else {
        std::cerr << "warning: no --train-data given; baselines omitted from report\n";
    }

    std::vector<std::shared_ptr<void>> keep_alive;
    const std::vector<eval::Method> methods =
        checkpoint_methods(model, with_baselines ? &train_ds : nullptr, cfg.knn_k, keep_alive);
    eval::SeasonReport report =
        eval::season_report(methods, test, cfg.hemisphere, cfg.train.threads);
    report.seed = cfg.train.seed;
    report.repeats = 1;
    report.dataset_id = data_path;
    for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";

    ensure_dir(out_dir);
    text::write_file(out_dir + "/report.csv", eval::report_to_csv(report));
    text::write_file(out_dir + "/report.txt", eval::report_to_table(report));
    std::cout << eval::report_to_table(report);
}

void cmd_predict(const RunConfig& cfg, const std::string& data_path,
                 const std::string& checkpoint, const std::string& out_path) {
    cfg.validate();
    const data::Dataset ds = data::load_dataset(data_path);
    if (ds.samples.empty()) throw ConfigError("predict: dataset is empty");
    const model::Model model = model::load_checkpoint(checkpoint);

    // values are reported on the meter grid so that consumption - ghat
    // reproduces net load exactly
    std::string out = "prosumer_id,date,slot,net_kwh,ghat_kwh,consumption_kwh\n";
    for (const data::DailySample& s : ds.samples) {
        const model::Prediction pred = model::predict_day(s, model);
        Vector net_q(kSlotsPerDay), ghat_q(kSlotsPerDay);
        for (Index t = 0; t < kSlotsPerDay; ++t) {
            net_q(t) = data::quantize_kwh(s.net_load(t));
            ghat_q(t) = data::quantize_kwh(pred.ghat(t));
        }
        const Vector consumption = model::consumption_from(net_q, ghat_q);
        for (Index t = 0; t < kSlotsPerDay; ++t) {
            out += s.prosumer_id + "," + s.date.to_string() + "," + std::to_string(t) + "," +
                   text::format_double(net_q(t)) + "," + text::format_double(ghat_q(t)) + "," +
                   text::format_double(consumption(t)) + "\n";
        }
    }
    text::write_file(out_path, out);
    std::cout << "predictions=" << ds.samples.size() * static_cast<std::size_t>(kSlotsPerDay)
              << "\n";
}

void cmd_report(const RunConfig& cfg, const std::string& train_data_path,
                const std::string& test_data_path, const std::string& out_dir,
                const std::string& day_series) {
    cfg.validate();
    const data::Dataset train_ds = truth_samples(data::load_dataset(train_data_path));
    const data::Dataset test_ds = truth_samples(data::load_dataset(test_data_path));
    if (train_ds.samples.empty()) throw ConfigError("report: training dataset has no Type-1 samples");
    if (test_ds.samples.empty()) throw ConfigError("report: test dataset has no ground truth");

    const Index knn_k = cfg.knn_auto_k ? 0 : cfg.knn_k;
    train::RepeatedRuns runs = train::repeated_runs(train_ds, test_ds, cfg.hi, cfg.attn, cfg.pred,
                                                    cfg.train, cfg.hemisphere, knn_k);
    runs.report.dataset_id = test_data_path;
    for (const std::string& w : runs.report.warnings) std::cerr << "warning: " << w << "\n";

    ensure_dir(out_dir);
    text::write_file(out_dir + "/config.txt", cfg.snapshot());
    text::write_file(out_dir + "/report.csv", eval::report_to_csv(runs.report));
    text::write_file(out_dir + "/report.txt", eval::report_to_table(runs.report));
    std::cout << eval::report_to_table(runs.report);

    if (!day_series.empty()) {
        const std::size_t colon = day_series.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("report: --day-series expects prosumer:YYYY-MM-DD");
        }
        const std::string prosumer = day_series.substr(0, colon);
        const data::Date date = data::Date::parse(day_series.substr(colon + 1));
        const data::DailySample* day1 = nullptr;
        const data::DailySample* day2 = nullptr;
        for (const data::DailySample& s : test_ds.samples) {
            if (s.prosumer_id != prosumer) continue;
            if (s.date == date) day1 = &s;
            if (s.date == date.next_day()) day2 = &s;
        }
        if (day1 == nullptr || day2 == nullptr) {
            throw ConfigError("report: test dataset lacks " + prosumer + " on " +
                              date.to_string() + " and the following day");
        }
        std::vector<std::shared_ptr<void>> keep_alive;
        const std::vector<eval::Method> methods =
            checkpoint_methods(runs.models.front(), &train_ds, runs.knn_k, keep_alive);
        text::write_file(out_dir + "/day_series.csv",
                         eval::day_series_csv(methods, *day1, *day2));
    }
}

} // namespace pvdis::cli
