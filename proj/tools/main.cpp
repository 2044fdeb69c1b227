#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pvdis/commands.hpp"
#include "pvdis/error.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::int64_t seed = -1;
    int threads = 0;

    void add_to(CLI::App* sub) {
        sub->add_option("--config", config_path, "key=value configuration file");
        sub->add_option("--seed", seed, "run seed (overrides config)");
        sub->add_option("--threads", threads, "worker threads; 1 forces serial execution");
    }

    pvdis::cli::RunConfig resolve() const {
        pvdis::cli::RunConfig cfg;
        if (!config_path.empty()) cfg.apply_file(config_path);
        // flags win over the file
        if (seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed);
        if (threads > 0) cfg.train.threads = threads;
        return cfg;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pvdis: behind-the-meter PV disaggregation"};
    app.require_subcommand(1);

    CommonFlags ingest_flags, synth_flags, train_flags, eval_flags, predict_flags, report_flags;

    std::string meter, weather, dataset_in, out;
    CLI::App* ingest = app.add_subcommand("ingest", "build a canonical dataset from CSVs");
    ingest->add_option("--meter", meter, "meter CSV (customer_id,category,date,v1..v48)");
    ingest->add_option("--weather", weather, "weather CSV (timestamp,ghi,dni,dhi)");
    ingest->add_option("--dataset", dataset_in, "existing canonical dataset (passthrough)");
    ingest->add_option("--out", out, "output dataset file")->required();
    ingest_flags.add_to(ingest);

    int n_prosumers = 0, n_days = 0;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset with truth");
    synth->add_option("--prosumers", n_prosumers, "number of prosumers")->required();
    synth->add_option("--days", n_days, "number of days")->required();
    synth->add_option("--out", out, "output dataset file")->required();
    synth_flags.add_to(synth);

    std::string data_path, checkpoint, train_data;
    CLI::App* train = app.add_subcommand("train", "train on the dataset's Type-1 samples");
    train->add_option("--data", data_path, "canonical dataset")->required();
    train->add_option("--out", out, "run directory")->required();
    train_flags.add_to(train);

    CLI::App* eval = app.add_subcommand("eval", "season report for a checkpoint");
    eval->add_option("--data", data_path, "test dataset with ground truth")->required();
    eval->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    eval->add_option("--train-data", train_data, "training dataset for the baselines");
    eval->add_option("--out", out, "output directory")->required();
    eval_flags.add_to(eval);

    CLI::App* predict = app.add_subcommand("predict", "predict generation and consumption");
    predict->add_option("--data", data_path, "dataset (Type-2 samples welcome)")->required();
    predict->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    predict->add_option("--out", out, "output CSV")->required();
    predict_flags.add_to(predict);

    std::string test_data, day_series;
    int repeats_override = 0;
    CLI::App* report = app.add_subcommand("report", "repeated-runs season report with baselines");
    report->add_option("--train-data", train_data, "training dataset")->required();
    report->add_option("--test-data", test_data, "test dataset")->required();
    report->add_option("--out", out, "output directory")->required();
    report->add_option("--repeats", repeats_override, "repeat count (overrides config)");
    report->add_option("--day-series", day_series, "prosumer:YYYY-MM-DD two-day series CSV");
    report_flags.add_to(report);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            pvdis::cli::cmd_ingest(ingest_flags.resolve(), meter, weather, dataset_in, out);
        } else if (synth->parsed()) {
            pvdis::cli::cmd_synth(synth_flags.resolve(), n_prosumers, n_days, out);
        } else if (train->parsed()) {
            pvdis::cli::cmd_train(train_flags.resolve(), data_path, out);
        } else if (eval->parsed()) {
            pvdis::cli::cmd_eval(eval_flags.resolve(), data_path, checkpoint, train_data, out);
        } else if (predict->parsed()) {
            pvdis::cli::cmd_predict(predict_flags.resolve(), data_path, checkpoint, out);
        } else if (report->parsed()) {
            pvdis::cli::RunConfig cfg = report_flags.resolve();
            if (repeats_override > 0) cfg.train.repeats = repeats_override;
            pvdis::cli::cmd_report(cfg, train_data, test_data, out, day_series);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
