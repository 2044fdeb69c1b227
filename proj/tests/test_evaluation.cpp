#include <cmath>
#include <numeric>

#include <doctest.h>

#include "pvdis/data_pipeline.hpp"
#include "pvdis/error.hpp"
#include "pvdis/evaluation.hpp"
#include "pvdis/rng.hpp"
#include "pvdis/text.hpp"

using namespace pvdis;

namespace {

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

data::Dataset truth_dataset(int prosumers, int days, std::uint64_t seed) {
    return data::synth_generate(prosumers, days, seed).dataset;
}

} // namespace

TEST_CASE("mae and rmse hand oracles") {
    const Vector t = Vector::Constant(5, 1.5);
    CHECK(eval::mae(t, t) == 0.0);
    CHECK(eval::rmse(t, t) == 0.0);

    CHECK(eval::mae(vec2(1, 3), vec2(0, 0)) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(eval::rmse(vec2(1, 3), vec2(0, 0)) ==
          doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));

    CHECK_THROWS_AS(eval::mae(t, vec2(0, 0)), ShapeError);
    CHECK_THROWS_AS(eval::rmse(t, vec2(0, 0)), ShapeError);
}

TEST_CASE("constant offset makes rmse equal mae") {
    rng::Engine eng(3);
    Vector truth(48);
    for (Index i = 0; i < 48; ++i) truth(i) = eng.uniform(-1, 1);
    const Vector pred = truth.array() + 0.37;
    CHECK(eval::mae(pred, truth) == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(eval::rmse(pred, truth) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("rmse dominates mae and both vanish only at equality") {
    rng::Engine eng(5);
    for (int rep = 0; rep < 1000; ++rep) {
        Vector a(16), b(16);
        for (Index i = 0; i < 16; ++i) {
            a(i) = eng.uniform(-2, 2);
            b(i) = eng.uniform(-2, 2);
        }
        const double m = eval::mae(a, b);
        const double r = eval::rmse(a, b);
        CHECK(r >= m);
        CHECK(m > 0.0);
    }
}

TEST_CASE("mae is invariant under jointly permuting the slots") {
    rng::Engine eng(7);
    Vector a(8), b(8);
    for (Index i = 0; i < 8; ++i) {
        a(i) = eng.uniform(-1, 1);
        b(i) = eng.uniform(-1, 1);
    }
    Vector ap = a.reverse();
    Vector bp = b.reverse();
    CHECK(eval::mae(a, b) == doctest::Approx(eval::mae(ap, bp)).epsilon(1e-15));
}

TEST_CASE("knn baseline") {
    const data::Dataset train = truth_dataset(3, 8, 11);
    const data::NormStats norm = data::zscore_fit(train.samples);
    const eval::KnnBaseline knn(train, norm);

    SUBCASE("query identical to a training day returns that day's truth") {
        const data::DailySample& q = train.samples[5];
        CHECK(knn.predict(q, 1) == *q.pv_truth);
    }

    SUBCASE("k equal to the training size returns the global mean day") {
        Vector mean = Vector::Zero(48);
        for (const data::DailySample& s : train.samples) mean += *s.pv_truth;
        mean /= static_cast<double>(train.samples.size());
        const Vector pred = knn.predict(train.samples[0], knn.size());
        CHECK((pred - mean).cwiseAbs().maxCoeff() <= 1e-12);
    }

    SUBCASE("toy set with hand-set distances: mean of the chosen two") {
        // three training days with PV plateaus 0, 1, 4; the query's features
        // sit closest to the first two
        data::Dataset toy;
        const data::SynthResult base = data::synth_generate(1, 4, 13);
        for (int i = 0; i < 3; ++i) {
            data::DailySample s = base.dataset.samples[static_cast<std::size_t>(i)];
            s.net_load = Vector::Constant(48, static_cast<double>(i));
            s.weather.dni = Vector::Constant(48, 100.0 + i);
            s.weather.dhi = Vector::Constant(48, 50.0 + i);
            s.weather.ghi = Vector::Constant(48, 150.0 + i);
            s.pv_truth = Vector::Constant(48, i == 2 ? 4.0 : static_cast<double>(i));
            toy.samples.push_back(s);
        }
        // exhaustive distance oracle in raw space: query at net=0.4 is
        // nearest to days 0 and 1 on every channel
        data::NormStats flat;
        flat.net_load = {0.0, 1.0};
        flat.dni = {100.0, 1.0};
        flat.dhi = {50.0, 1.0};
        flat.ghi = {150.0, 1.0};
        const eval::KnnBaseline toy_knn(toy, flat);
        data::DailySample query = toy.samples[0];
        query.net_load = Vector::Constant(48, 0.4);
        const Vector pred = toy_knn.predict(query, 2);
        CHECK((pred - Vector::Constant(48, 0.5)).cwiseAbs().maxCoeff() <= 1e-12);
    }

    SUBCASE("k bounds and empty training set are rejected") {
        CHECK_THROWS_AS(knn.predict(train.samples[0], 0), ConfigError);
        CHECK_THROWS_AS(knn.predict(train.samples[0], knn.size() + 1), ConfigError);
        CHECK_THROWS_AS(eval::KnnBaseline(data::Dataset{}, norm), ConfigError);
    }

    SUBCASE("k selection prefers the best validation error, small k on ties") {
        const std::vector<data::DailySample> val(train.samples.begin(),
                                                 train.samples.begin() + 4);
        const Index k = eval::select_knn_k(knn, val, {1, 3, 5, 10});
        CHECK(k == 1); // validation days are in the training set, so k=1 is exact
        CHECK(eval::select_knn_k(knn, {}, {3, 5}) == 3);
    }
}

TEST_CASE("mean baseline") {
    data::Dataset train = truth_dataset(1, 1, 3);
    const Vector only = *train.samples[0].pv_truth;
    CHECK(eval::mean_baseline(train) == only);

    data::Dataset two = truth_dataset(1, 2, 3);
    two.samples[0].pv_truth = Vector::Zero(48);
    two.samples[1].pv_truth = Vector::Constant(48, 2.0);
    CHECK(eval::mean_baseline(two) == Vector::Constant(48, 1.0));

    CHECK_THROWS_AS(eval::mean_baseline(data::Dataset{}), ConfigError);
}

TEST_CASE("season report") {
    const data::Dataset test = truth_dataset(2, 40, 17); // Jan-Feb 2011: Summer only

    SUBCASE("perfect predictor yields all-zero rows") {
        std::vector<eval::Method> methods{
            {"Oracle", [&](const data::DailySample& s) { return *s.pv_truth; }}};
        const eval::SeasonReport rep =
            eval::season_report(methods, test, data::Hemisphere::South);
        REQUIRE(rep.rows.size() == 1);
        CHECK(rep.rows[0].season == data::Season::Summer);
        CHECK(rep.rows[0].mae_kwh == 0.0);
        CHECK(rep.rows[0].rmse_kwh == 0.0);
        CHECK(rep.rows[0].n_days == 80);
        CHECK(rep.warnings.size() == 3); // three empty seasons
    }

    SUBCASE("aggregation equals the mean of per-day maes") {
        std::vector<eval::Method> methods{
            {"Zero", [](const data::DailySample&) { return Vector(Vector::Zero(48)); }}};
        const eval::SeasonReport rep =
            eval::season_report(methods, test, data::Hemisphere::South, 3);
        double sum = 0.0;
        for (const data::DailySample& s : test.samples) {
            sum += eval::mae(Vector::Zero(48), *s.pv_truth);
        }
        CHECK(std::abs(rep.rows[0].mae_kwh - sum / static_cast<double>(test.samples.size())) <=
              1e-12);
        CHECK(rep.rows[0].rmse_kwh >= rep.rows[0].mae_kwh);
    }

    SUBCASE("one row per season and method, csv schema fixed") {
        const data::Dataset year = truth_dataset(1, 365, 19);
        std::vector<eval::Method> methods{
            {"Oracle", [&](const data::DailySample& s) { return *s.pv_truth; }},
            {"Zero", [](const data::DailySample&) { return Vector(Vector::Zero(48)); }}};
        eval::SeasonReport rep = eval::season_report(methods, year, data::Hemisphere::South);
        CHECK(rep.rows.size() == 8); // 4 seasons x 2 methods
        rep.seed = 42;
        rep.dataset_id = "year";
        const std::string csv = eval::report_to_csv(rep);
        const auto lines = text::split(csv, '\n');
        CHECK(lines[0] == "# seed=42 repeats=1 dataset=year");
        CHECK(lines[1] == "season,method,mae_kwh,rmse_kwh,mae_std,rmse_std,n_days");
        CHECK(lines.size() == 2 + 8 + 1); // header lines + rows + trailing empty
        const auto first = text::split(lines[2], ',');
        CHECK(first.size() == 7);
        CHECK(first[0] == "Summer");
        CHECK(first[1] == "Oracle");

        const std::string table = eval::report_to_table(rep);
        CHECK(table.find("Summer") != std::string::npos);
        CHECK(table.find("Zero") != std::string::npos);
    }

    SUBCASE("missing truth is rejected") {
        data::Dataset no_truth = test;
        no_truth.samples[0].pv_truth.reset();
        std::vector<eval::Method> methods{
            {"Zero", [](const data::DailySample&) { return Vector(Vector::Zero(48)); }}};
        CHECK_THROWS_AS(eval::season_report(methods, no_truth, data::Hemisphere::South),
                        ValidationError);
    }
}

TEST_CASE("aggregate_reports") {
    const data::Dataset test = truth_dataset(1, 10, 23);
    std::vector<eval::Method> methods{
        {"Zero", [](const data::DailySample&) { return Vector(Vector::Zero(48)); }}};
    const eval::SeasonReport one = eval::season_report(methods, test, data::Hemisphere::South);

    SUBCASE("a single run aggregates to itself with zero std") {
        const eval::SeasonReport agg = eval::aggregate_reports({one});
        CHECK(agg.rows[0].mae_kwh == one.rows[0].mae_kwh);
        CHECK(agg.rows[0].mae_std == 0.0);
        CHECK(agg.repeats == 1);
    }

    SUBCASE("identical runs have zero std") {
        const eval::SeasonReport agg = eval::aggregate_reports({one, one, one});
        CHECK(agg.rows[0].mae_std == 0.0);
        CHECK(agg.rows[0].rmse_std == 0.0);
        CHECK(agg.repeats == 3);
    }

    SUBCASE("distinct runs report spread") {
        eval::SeasonReport other = one;
        other.rows[0].mae_kwh += 0.2;
        const eval::SeasonReport agg = eval::aggregate_reports({one, other});
        CHECK(agg.rows[0].mae_kwh == doctest::Approx(one.rows[0].mae_kwh + 0.1).epsilon(1e-12));
        CHECK(agg.rows[0].mae_std == doctest::Approx(0.1).epsilon(1e-12));
    }
}

TEST_CASE("day series csv") {
    const data::Dataset ds = truth_dataset(1, 3, 29);
    std::vector<eval::Method> methods{
        {"Oracle", [&](const data::DailySample& s) { return *s.pv_truth; }},
        {"Zero", [](const data::DailySample&) { return Vector(Vector::Zero(48)); }}};

    const std::string csv = eval::day_series_csv(methods, ds.samples[0], ds.samples[1]);
    const auto lines = text::split(csv, '\n');
    REQUIRE(lines.size() == 1 + 96 + 1);
    CHECK(lines[0] == "slot,truth,Oracle,Zero");
    for (int slot = 0; slot < 96; ++slot) {
        const auto fields = text::split(lines[static_cast<std::size_t>(slot) + 1], ',');
        REQUIRE(fields.size() == 4);
        const data::DailySample& day = slot < 48 ? ds.samples[0] : ds.samples[1];
        const double truth = (*day.pv_truth)(slot % 48);
        CHECK(text::parse_double(fields[1], "truth") == truth);
        CHECK(text::parse_double(fields[2], "oracle") == truth);
        CHECK(text::parse_double(fields[3], "zero") == 0.0);
    }

    CHECK_THROWS_AS(eval::day_series_csv(methods, ds.samples[0], ds.samples[2]),
                    ValidationError);
    data::DailySample other = ds.samples[1];
    other.prosumer_id = "someone_else";
    CHECK_THROWS_AS(eval::day_series_csv(methods, ds.samples[0], other), ValidationError);
}
