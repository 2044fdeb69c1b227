#include "pvdis/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pvdis/error.hpp"
#include "pvdis/parallel.hpp"
#include "pvdis/text.hpp"

namespace pvdis::eval {

namespace {

void check_lengths(const Vector& pred, const Vector& truth, const char* what) {
    if (pred.size() != truth.size()) {
        throw ShapeError(std::string(what) + ": lengths disagree: " +
                         std::to_string(pred.size()) + " vs " + std::to_string(truth.size()));
    }
}

} // namespace

double mae(const Vector& pred, const Vector& truth) {
    check_lengths(pred, truth, "mae");
    return (pred - truth).cwiseAbs().mean();
}

double rmse(const Vector& pred, const Vector& truth) {
    check_lengths(pred, truth, "rmse");
    return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

Vector feature_vector(const data::DailySample& sample, const data::NormStats& norm) {
    Vector f(4 * kSlotsPerDay);
    f.segment(0, kSlotsPerDay) = data::NormStats::apply(sample.net_load, norm.net_load);
    f.segment(kSlotsPerDay, kSlotsPerDay) = data::NormStats::apply(sample.weather.dni, norm.dni);
    f.segment(2 * kSlotsPerDay, kSlotsPerDay) =
        data::NormStats::apply(sample.weather.dhi, norm.dhi);
    f.segment(3 * kSlotsPerDay, kSlotsPerDay) =
        data::NormStats::apply(sample.weather.ghi, norm.ghi);
    return f;
}

KnnBaseline::KnnBaseline(const data::Dataset& train, const data::NormStats& norm)
    : norm_(norm) {
    if (train.samples.empty()) throw ConfigError("knn: empty training set");
    for (const data::DailySample& s : train.samples) {
        if (!s.pv_truth) {
            throw ConfigError("knn: training sample " + s.prosumer_id + " " +
                              s.date.to_string() + " has no pv truth");
        }
        features_.push_back(feature_vector(s, norm_));
        targets_.push_back(*s.pv_truth);
    }
}

Vector KnnBaseline::predict(const data::DailySample& query, Index k) const {
    if (k < 1 || k > size()) {
        throw ConfigError("knn: k must be in [1, " + std::to_string(size()) + "], got " +
                          std::to_string(k));
    }
    const Vector f = feature_vector(query, norm_);
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(features_.size());
    for (std::size_t i = 0; i < features_.size(); ++i) {
        dist.emplace_back((features_[i] - f).norm(), i);
    }
    std::sort(dist.begin(), dist.end());
    Vector out = Vector::Zero(kSlotsPerDay);
    for (Index i = 0; i < k; ++i) out += targets_[dist[static_cast<std::size_t>(i)].second];
    return out / static_cast<double>(k);
}

Index select_knn_k(const KnnBaseline& knn, const std::vector<data::DailySample>& val,
                   std::vector<Index> candidates) {
    candidates.erase(std::remove_if(candidates.begin(), candidates.end(),
                                    [&](Index k) { return k < 1 || k > knn.size(); }),
                     candidates.end());
    if (candidates.empty()) throw ConfigError("knn: no feasible k candidates");
    std::sort(candidates.begin(), candidates.end());
    if (val.empty()) return candidates.front();
    Index best_k = candidates.front();
    double best_mae = -1.0;
    for (Index k : candidates) {
        double total = 0.0;
        for (const data::DailySample& s : val) {
            if (!s.pv_truth) continue;
            total += mae(knn.predict(s, k), *s.pv_truth);
        }
        if (best_mae < 0.0 || total < best_mae) {
            best_mae = total;
            best_k = k;
        }
    }
    return best_k;
}

Vector mean_baseline(const data::Dataset& train) {
    if (train.samples.empty()) throw ConfigError("mean baseline: empty training set");
    Vector sum = Vector::Zero(kSlotsPerDay);
    long n = 0;
    for (const data::DailySample& s : train.samples) {
        if (!s.pv_truth) {
            throw ConfigError("mean baseline: training sample without pv truth");
        }
        sum += *s.pv_truth;
        ++n;
    }
    return sum / static_cast<double>(n);
}

SeasonReport season_report(const std::vector<Method>& methods, const data::Dataset& test,
                           data::Hemisphere hemisphere, int threads) {
    if (methods.empty()) throw ConfigError("season_report: no methods given");
    for (const data::DailySample& s : test.samples) {
        if (!s.pv_truth) {
            throw ValidationError("season_report: sample " + s.prosumer_id + " " +
                                  s.date.to_string() + " has no ground truth");
        }
    }

    // per-sample metrics first (parallel), then fixed-order averaging
    const std::size_t n = test.samples.size();
    const std::size_t m = methods.size();
    std::vector<double> sample_mae(n * m), sample_rmse(n * m);
    run_chunked(n, /*chunks=*/std::max<std::size_t>(1, std::min<std::size_t>(n, 64)), threads,
                [&](std::size_t begin, std::size_t end, std::size_t) {
                    for (std::size_t i = begin; i < end; ++i) {
                        const data::DailySample& s = test.samples[i];
                        for (std::size_t j = 0; j < m; ++j) {
                            const Vector pred = methods[j].predict(s);
                            sample_mae[i * m + j] = mae(pred, *s.pv_truth);
                            sample_rmse[i * m + j] = rmse(pred, *s.pv_truth);
                        }
                    }
                });

    SeasonReport report;
    for (int si = 0; si < 4; ++si) {
        const auto season = static_cast<data::Season>(si);
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (data::season_of(test.samples[i].date, hemisphere) == season) members.push_back(i);
        }
        if (members.empty()) {
            report.warnings.push_back(std::string("no samples for season ") +
                                      data::season_name(season) + "; row omitted");
            continue;
        }
        for (std::size_t j = 0; j < m; ++j) {
            ReportRow row;
            row.season = season;
            row.method = methods[j].name;
            row.n_days = static_cast<long>(members.size());
            double mae_sum = 0.0, rmse_sum = 0.0;
            for (std::size_t i : members) {
                mae_sum += sample_mae[i * m + j];
                rmse_sum += sample_rmse[i * m + j];
            }
            row.mae_kwh = mae_sum / static_cast<double>(members.size());
            row.rmse_kwh = rmse_sum / static_cast<double>(members.size());
            report.rows.push_back(row);
        }
    }
    return report;
}

SeasonReport aggregate_reports(const std::vector<SeasonReport>& runs) {
    if (runs.empty()) throw ConfigError("aggregate_reports: no runs");
    SeasonReport out = runs.front();
    out.repeats = static_cast<int>(runs.size());
    const std::size_t n_rows = out.rows.size();
    for (const SeasonReport& r : runs) {
        if (r.rows.size() != n_rows) {
            throw ValidationError("aggregate_reports: runs have differing row sets");
        }
    }
    // identical runs must aggregate to themselves with std exactly 0
    const auto mean_and_std = [&](const std::function<double(const ReportRow&)>& get,
                                  std::size_t i) {
        bool all_equal = true;
        for (const SeasonReport& r : runs) {
            if (get(r.rows[i]) != get(runs.front().rows[i])) all_equal = false;
        }
        if (all_equal) return std::make_pair(get(runs.front().rows[i]), 0.0);
        double mean = 0.0;
        for (const SeasonReport& r : runs) mean += get(r.rows[i]);
        mean /= static_cast<double>(runs.size());
        double var = 0.0;
        for (const SeasonReport& r : runs) {
            var += (get(r.rows[i]) - mean) * (get(r.rows[i]) - mean);
        }
        return std::make_pair(mean, std::sqrt(var / static_cast<double>(runs.size())));
    };
    for (std::size_t i = 0; i < n_rows; ++i) {
        for (const SeasonReport& r : runs) {
            if (r.rows[i].method != out.rows[i].method || r.rows[i].season != out.rows[i].season) {
                throw ValidationError("aggregate_reports: row order mismatch across runs");
            }
        }
        std::tie(out.rows[i].mae_kwh, out.rows[i].mae_std) =
            mean_and_std([](const ReportRow& r) { return r.mae_kwh; }, i);
        std::tie(out.rows[i].rmse_kwh, out.rows[i].rmse_std) =
            mean_and_std([](const ReportRow& r) { return r.rmse_kwh; }, i);
    }
    return out;
}

std::string report_to_csv(const SeasonReport& report) {
    std::string out;
    out += "# seed=" + std::to_string(report.seed) + " repeats=" + std::to_string(report.repeats) +
           " dataset=" + (report.dataset_id.empty() ? "-" : report.dataset_id) + "\n";
    out += "season,method,mae_kwh,rmse_kwh,mae_std,rmse_std,n_days\n";
    for (const ReportRow& r : report.rows) {
        out += std::string(data::season_name(r.season)) + "," + r.method + "," +
               text::format_double(r.mae_kwh) + "," + text::format_double(r.rmse_kwh) + "," +
               text::format_double(r.mae_std) + "," + text::format_double(r.rmse_std) + "," +
               std::to_string(r.n_days) + "\n";
    }
    return out;
}

std::string report_to_table(const SeasonReport& report) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-8s %-12s %12s %12s %10s %10s %8s\n", "Season", "Method",
                  "MAE(kWh)", "RMSE(kWh)", "MAE std", "RMSE std", "days");
    out += line;
    out += std::string(78, '-') + "\n";
    for (const ReportRow& r : report.rows) {
        std::snprintf(line, sizeof(line), "%-8s %-12s %12.4f %12.4f %10.4f %10.4f %8ld\n",
                      data::season_name(r.season), r.method.c_str(), r.mae_kwh, r.rmse_kwh,
                      r.mae_std, r.rmse_std, r.n_days);
        out += line;
    }
    return out;
}

std::string day_series_csv(const std::vector<Method>& methods, const data::DailySample& day1,
                           const data::DailySample& day2) {
    if (day1.prosumer_id != day2.prosumer_id) {
        throw ValidationError("day series: samples belong to different prosumers");
    }
    if (day2.date != day1.date.next_day()) {
        throw ValidationError("day series: dates " + day1.date.to_string() + " and " +
                              day2.date.to_string() + " are not consecutive");
    }
    if (!day1.pv_truth || !day2.pv_truth) {
        throw ValidationError("day series: both days need pv truth");
    }
    std::string out = "slot,truth";
    for (const Method& method : methods) out += "," + method.name;
    out += "\n";
    std::vector<Vector> preds1, preds2;
    for (const Method& method : methods) {
        preds1.push_back(method.predict(day1));
        preds2.push_back(method.predict(day2));
    }
    for (Index slot = 0; slot < 2 * kSlotsPerDay; ++slot) {
        const bool second = slot >= kSlotsPerDay;
        const Index i = second ? slot - kSlotsPerDay : slot;
        const data::DailySample& day = second ? day2 : day1;
        const std::vector<Vector>& preds = second ? preds2 : preds1;
        out += std::to_string(slot) + "," + text::format_double((*day.pv_truth)(i));
        for (const Vector& p : preds) out += "," + text::format_double(p(i));
        out += "\n";
    }
    return out;
}

} // namespace pvdis::eval
