#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pvdis/data_pipeline.hpp"
#include "pvdis/types.hpp"

namespace pvdis::eval {

/// Mean absolute error over one day's series, kWh.
double mae(const Vector& pred, const Vector& truth);

/// Root mean square error over one day's series, kWh.
double rmse(const Vector& pred, const Vector& truth);

/// Feature vector for neighbor search: normalized net load, DNI, DHI, GHI
/// concatenated (4 * T values).
Vector feature_vector(const data::DailySample& sample, const data::NormStats& norm);

/// Nearest-neighbor regression over training days: prediction is the
/// elementwise mean of the k nearest days' PV truth. Distances are
/// Euclidean in normalized feature space; ties break on training index.
class KnnBaseline {
public:
    KnnBaseline(const data::Dataset& train, const data::NormStats& norm);

    Vector predict(const data::DailySample& query, Index k) const;
    Index size() const { return static_cast<Index>(features_.size()); }

private:
    std::vector<Vector> features_;
    std::vector<Vector> targets_;
    data::NormStats norm_;
};

/// Picks the candidate k with the lowest mean MAE on the validation slice;
/// ties go to the smaller k.
Index select_knn_k(const KnnBaseline& knn, const std::vector<data::DailySample>& val,
                   std::vector<Index> candidates);

/// Slot-wise mean PV day of the training set, returned for every query.
Vector mean_baseline(const data::Dataset& train);

struct Method {
    std::string name;
    std::function<Vector(const data::DailySample&)> predict; // thread-safe, read-only
};

struct ReportRow {
    data::Season season;
    std::string method;
    double mae_kwh = 0.0;
    double rmse_kwh = 0.0;
    double mae_std = 0.0;
    double rmse_std = 0.0;
    long n_days = 0;
};

/// Table-I-shaped result: one row per (season, method), metrics averaged
/// over prosumer-days, std across repeat runs.
struct SeasonReport {
    std::vector<ReportRow> rows;
    std::uint64_t seed = 0;
    int repeats = 1;
    std::string dataset_id;
    std::vector<std::string> warnings; // e.g. seasons with no samples
};

/// Evaluates every method on the test samples (all must carry truth),
/// season by season. Per-sample work may fan out over threads; averages
/// accumulate in fixed sample order.
SeasonReport season_report(const std::vector<Method>& methods, const data::Dataset& test,
                           data::Hemisphere hemisphere, int threads = 1);

/// Combines per-run reports: mean and population std over runs.
SeasonReport aggregate_reports(const std::vector<SeasonReport>& runs);

std::string report_to_csv(const SeasonReport& report);
std::string report_to_table(const SeasonReport& report);

/// Fig.-2-style 96-row CSV for two consecutive days of one prosumer:
/// slot, truth, one column per method.
std::string day_series_csv(const std::vector<Method>& methods, const data::DailySample& day1,
                           const data::DailySample& day2);

} // namespace pvdis::eval
