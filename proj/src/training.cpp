#include "pvdis/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "pvdis/error.hpp"
#include "pvdis/parallel.hpp"
#include "pvdis/rng.hpp"

namespace pvdis::train {

void TrainConfig::validate() const {
    // learning_rate 0 is allowed: a null update must leave parameters
    // bit-identical, which tests rely on
    if (learning_rate < 0.0) throw ConfigError("train: learning_rate must be >= 0");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (repeats < 1) throw ConfigError("train: repeats must be >= 1");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw ConfigError("train: moment decays must be in [0, 1)");
    }
    if (epsilon <= 0.0) throw ConfigError("train: epsilon must be > 0");
    if (patience < 1) throw ConfigError("train: patience must be >= 1");
    if (val_fraction < 0.0 || val_fraction > 0.5) {
        throw ConfigError("train: val_fraction must be in [0, 0.5]");
    }
    if (threads < 1) throw ConfigError("train: threads must be >= 1");
}

AdamState AdamState::init(const model::ModelParams& params) {
    AdamState state;
    model::for_each_param(params, [&](const std::string&, const Matrix& p) {
        state.m.push_back(Matrix::Zero(p.rows(), p.cols()));
        state.v.push_back(Matrix::Zero(p.rows(), p.cols()));
    });
    return state;
}

void adam_step(model::ModelParams& params,
               const std::vector<std::pair<std::string, Matrix>>& grads, AdamState& state,
               const TrainConfig& cfg) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    std::size_t i = 0;
    model::for_each_param(params, [&](const std::string& name, Matrix& p) {
        if (i >= grads.size() || grads[i].first != name) {
            throw Error("adam_step: gradient list misaligned at '" + name + "'");
        }
        const Matrix& g = grads[i].second;
        if (g.rows() != p.rows() || g.cols() != p.cols()) {
            throw ShapeError("adam_step: gradient shape mismatch for '" + name + "'");
        }
        if (!g.allFinite()) {
            throw Error("adam_step: non-finite gradient in parameter group '" + name + "'");
        }
        Matrix& m = state.m[i];
        Matrix& v = state.v[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        p.array() -=
            cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.epsilon);
        ++i;
    });
    if (i != grads.size()) throw Error("adam_step: extra gradients beyond parameter list");
}

namespace {

struct PreparedSample {
    Vector norm_load;
    Matrix tokens;
    Vector truth; // kWh targets
    const data::DailySample* raw = nullptr;
};

PreparedSample prepare(const data::DailySample& s, const model::Model& model, bool need_truth) {
    s.validate();
    PreparedSample p;
    p.norm_load = data::NormStats::apply(s.net_load, model.norm.net_load);
    p.tokens = attn::tokenize_weather(model.norm.apply_weather(s.weather));
    if (need_truth) {
        if (!s.pv_truth) {
            throw ConfigError("train: sample " + s.prosumer_id + " " + s.date.to_string() +
                              " has no pv truth");
        }
        p.truth = *s.pv_truth;
    }
    p.raw = &s;
    return p;
}

constexpr std::size_t kGradChunks = 8;

struct GradAccumulator {
    // one buffer set per chunk, reused across batches; gradients combine in
    // chunk order so the result is independent of the thread count
    std::vector<std::vector<Matrix>> chunk_sums;

    explicit GradAccumulator(const model::ModelParams& params) {
        std::vector<Matrix> zeros;
        model::for_each_param(params, [&](const std::string&, const Matrix& p) {
            zeros.push_back(Matrix::Zero(p.rows(), p.cols()));
        });
        chunk_sums.assign(kGradChunks, zeros);
    }
};

BatchResult reduce_batch(const model::Model& model, const std::vector<const PreparedSample*>& batch,
                         int threads, GradAccumulator& acc) {
    for (auto& sums : acc.chunk_sums) {
        for (Matrix& m : sums) m.setZero();
    }

    BatchResult result;
    result.sample_loss.assign(batch.size(), 0.0);
    run_chunked(batch.size(), kGradChunks, threads,
                [&](std::size_t begin, std::size_t end, std::size_t chunk) {
                    if (begin == end) return;
                    // one graph per chunk: the chunk's samples share the
                    // parameter leaves, so a single backward sweep leaves the
                    // summed gradients in them
                    const model::BoundModel bound = model::bind(model.params);
                    std::vector<ad::NodePtr> losses;
                    losses.reserve(end - begin);
                    for (std::size_t i = begin; i < end; ++i) {
                        const PreparedSample& s = *batch[i];
                        const ad::NodePtr pred = model::prediction_graph(
                            ad::leaf(s.norm_load), ad::leaf(s.tokens), model.hi_cfg,
                            model.attn_cfg, bound);
                        losses.push_back(ad::mse(pred, ad::leaf(s.truth)));
                    }
                    ad::NodePtr total = losses.front();
                    for (std::size_t j = 1; j < losses.size(); ++j) {
                        total = ad::add(total, losses[j]);
                    }
                    ad::backward(total);
                    for (std::size_t i = begin; i < end; ++i) {
                        result.sample_loss[i] = losses[i - begin]->value(0, 0);
                    }
                    for (std::size_t p = 0; p < bound.flat.size(); ++p) {
                        acc.chunk_sums[chunk][p] += bound.flat[p].second->grad;
                    }
                });

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    std::size_t idx = 0;
    model::for_each_param(model.params, [&](const std::string& name, const Matrix& p) {
        Matrix sum = Matrix::Zero(p.rows(), p.cols());
        for (std::size_t c = 0; c < kGradChunks; ++c) sum += acc.chunk_sums[c][idx];
        result.grads.emplace_back(name, sum * inv_n);
        ++idx;
    });
    double loss = 0.0;
    for (double l : result.sample_loss) loss += l;
    result.mean_loss = loss * inv_n;
    return result;
}

} // namespace

BatchResult compute_batch(const model::Model& model,
                          const std::vector<const data::DailySample*>& batch, int threads) {
    if (batch.empty()) throw ConfigError("compute_batch: empty batch");
    std::vector<PreparedSample> prepared;
    prepared.reserve(batch.size());
    for (const data::DailySample* s : batch) prepared.push_back(prepare(*s, model, true));
    std::vector<const PreparedSample*> ptrs;
    ptrs.reserve(prepared.size());
    for (const PreparedSample& p : prepared) ptrs.push_back(&p);
    GradAccumulator acc(model.params);
    return reduce_batch(model, ptrs, threads, acc);
}

namespace {

// mean per-day MAE/RMSE of the current parameters over prepared samples,
// evaluated in parallel but reduced in sample order
std::pair<double, double> evaluate_metrics(const model::Model& model,
                                           const std::vector<PreparedSample>& samples,
                                           int threads) {
    std::vector<double> maes(samples.size()), rmses(samples.size());
    run_chunked(samples.size(), std::max<std::size_t>(1, samples.size()), threads,
                [&](std::size_t begin, std::size_t end, std::size_t) {
                    for (std::size_t i = begin; i < end; ++i) {
                        const model::BoundModel bound = model::bind(model.params);
                        const Vector ghat =
                            model::prediction_graph(ad::leaf(samples[i].norm_load),
                                                    ad::leaf(samples[i].tokens), model.hi_cfg,
                                                    model.attn_cfg, bound)
                                ->value.col(0);
                        maes[i] = eval::mae(ghat, samples[i].truth);
                        rmses[i] = eval::rmse(ghat, samples[i].truth);
                    }
                });
    double mae_sum = 0.0, rmse_sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        mae_sum += maes[i];
        rmse_sum += rmses[i];
    }
    const double n = static_cast<double>(samples.size());
    return {mae_sum / n, rmse_sum / n};
}

} // namespace

model::ModelParams initial_params(const data::Dataset& d1, const hi::HIConfig& hi_cfg,
                                  const attn::AttentionConfig& attn_cfg,
                                  const model::PredConfig& pred_cfg, std::uint64_t seed) {
    model::ModelParams params = model::init_params(hi_cfg, attn_cfg, pred_cfg, seed);
    Vector mean_day = Vector::Zero(kSlotsPerDay);
    long n = 0;
    for (const data::DailySample& s : d1.samples) {
        if (!s.pv_truth) continue;
        mean_day += *s.pv_truth;
        ++n;
    }
    if (n > 0) {
        params.pred.layers.back().b.col(0) = mean_day / static_cast<double>(n);
    }
    return params;
}

TrainResult train(const data::Dataset& d1, const hi::HIConfig& hi_cfg,
                  const attn::AttentionConfig& attn_cfg, const model::PredConfig& pred_cfg,
                  const TrainConfig& cfg) {
    cfg.validate();
    hi_cfg.validate(kSlotsPerDay);
    attn_cfg.validate();
    if (d1.samples.empty()) throw ConfigError("train: empty dataset");
    for (const data::DailySample& s : d1.samples) {
        if (!s.pv_truth) {
            throw ConfigError("train: sample " + s.prosumer_id + " " + s.date.to_string() +
                              " has no pv truth; training needs Type-1 data");
        }
    }

    TrainResult result;

    // validation slice: samples on the last val_fraction of distinct dates
    std::set<data::Date> dates;
    for (const data::DailySample& s : d1.samples) dates.insert(s.date);
    const std::size_t n_val_dates = static_cast<std::size_t>(
        std::floor(cfg.val_fraction * static_cast<double>(dates.size())));
    std::set<data::Date> val_dates;
    {
        auto it = dates.rbegin();
        for (std::size_t i = 0; i < n_val_dates; ++i, ++it) val_dates.insert(*it);
    }
    std::vector<const data::DailySample*> train_samples, val_samples;
    for (const data::DailySample& s : d1.samples) {
        (val_dates.count(s.date) ? val_samples : train_samples).push_back(&s);
    }
    if (val_samples.empty()) {
        result.warnings.push_back(
            "validation slice is empty; selecting on the training samples instead");
        val_samples = train_samples;
    }

    {
        bool all_same = true;
        for (const data::DailySample* s : train_samples) {
            if (*s->pv_truth != *train_samples.front()->pv_truth) {
                all_same = false;
                break;
            }
        }
        if (all_same) result.warnings.push_back("all training targets are identical");
    }

    model::Model model;
    model.hi_cfg = hi_cfg;
    model.attn_cfg = attn_cfg;
    model.pred_cfg = pred_cfg;
    {
        std::vector<data::DailySample> fit_slice;
        for (const data::DailySample* s : train_samples) fit_slice.push_back(*s);
        model.norm = data::zscore_fit(fit_slice);
    }
    model.params = initial_params(d1, hi_cfg, attn_cfg, pred_cfg, cfg.seed);

    std::vector<PreparedSample> train_prep, val_prep;
    for (const data::DailySample* s : train_samples) train_prep.push_back(prepare(*s, model, true));
    for (const data::DailySample* s : val_samples) val_prep.push_back(prepare(*s, model, true));

    AdamState adam = AdamState::init(model.params);
    GradAccumulator acc(model.params);

    model::ModelParams best_params = model.params;
    double best_val_mae = -1.0;
    int best_epoch = 0;

    std::vector<std::size_t> order(train_prep.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        rng::Engine shuffler(rng::mix(cfg.seed, static_cast<std::uint64_t>(epoch)));
        shuffler.shuffle(order);

        const std::size_t n = order.size();
        // per-sample losses keyed by the sample's stable index, so the epoch
        // loss does not depend on the shuffle or the batching
        std::vector<double> epoch_loss(n, 0.0);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<const PreparedSample*> batch;
            batch.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) batch.push_back(&train_prep[order[i]]);
            const BatchResult br = reduce_batch(model, batch, cfg.threads, acc);
            adam_step(model.params, br.grads, adam, cfg);
            for (std::size_t i = start; i < stop; ++i) {
                epoch_loss[order[i]] = br.sample_loss[i - start];
            }
        }

        EpochStats stats;
        double loss_sum = 0.0;
        for (double l : epoch_loss) loss_sum += l;
        stats.train_loss = loss_sum / static_cast<double>(n);
        const auto [val_mae, val_rmse] = evaluate_metrics(model, val_prep, cfg.threads);
        stats.val_mae = val_mae;
        stats.val_rmse = val_rmse;
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.epochs.push_back(stats);

        if (best_epoch == 0 || val_mae < best_val_mae) {
            best_val_mae = val_mae;
            best_epoch = epoch;
            best_params = model.params;
        }
        if (epoch - best_epoch >= cfg.patience) break;
    }

    model.params = std::move(best_params);
    result.model = std::move(model);
    result.best_epoch = best_epoch;
    return result;
}

RepeatedRuns repeated_runs(const data::Dataset& train_ds, const data::Dataset& test_ds,
                           const hi::HIConfig& hi_cfg, const attn::AttentionConfig& attn_cfg,
                           const model::PredConfig& pred_cfg, const TrainConfig& cfg,
                           data::Hemisphere hemisphere, Index knn_k) {
    cfg.validate();
    RepeatedRuns result;
    std::vector<eval::SeasonReport> reports;
    for (int r = 0; r < cfg.repeats; ++r) {
        TrainConfig run_cfg = cfg;
        run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(r);
        TrainResult tr = train(train_ds, hi_cfg, attn_cfg, pred_cfg, run_cfg);

        const eval::KnnBaseline knn(train_ds, tr.model.norm);
        if (r == 0) {
            if (knn_k >= 1) {
                result.knn_k = std::min<Index>(knn_k, knn.size());
            } else {
                // select on the run's validation dates (same rule as train)
                std::set<data::Date> dates;
                for (const data::DailySample& s : train_ds.samples) dates.insert(s.date);
                const std::size_t n_val = static_cast<std::size_t>(
                    std::floor(cfg.val_fraction * static_cast<double>(dates.size())));
                std::set<data::Date> val_dates;
                auto it = dates.rbegin();
                for (std::size_t i = 0; i < n_val; ++i, ++it) val_dates.insert(*it);
                std::vector<data::DailySample> val;
                for (const data::DailySample& s : train_ds.samples) {
                    if (val_dates.count(s.date)) val.push_back(s);
                }
                result.knn_k = eval::select_knn_k(knn, val, {1, 3, 5, 10});
            }
        }
        const Index k = result.knn_k;
        const Vector mean_day = eval::mean_baseline(train_ds);
        const model::Model& m = tr.model;

        std::vector<eval::Method> methods;
        methods.push_back({"Proposed", [&m](const data::DailySample& s) {
                               return model::predict_day(s, m).ghat;
                           }});
        methods.push_back(
            {"KNN", [&knn, k](const data::DailySample& s) { return knn.predict(s, k); }});
        methods.push_back({"Mean", [mean_day](const data::DailySample&) { return mean_day; }});

        eval::SeasonReport rep = eval::season_report(methods, test_ds, hemisphere, cfg.threads);
        rep.seed = run_cfg.seed;
        reports.push_back(std::move(rep));

        result.histories.push_back(std::move(tr.history));
        result.models.push_back(std::move(tr.model));
    }
    result.report = eval::aggregate_reports(reports);
    result.report.seed = cfg.seed;
    result.report.repeats = cfg.repeats;
    return result;
}

} // namespace pvdis::train
