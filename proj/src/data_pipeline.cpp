#include "pvdis/data_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <tuple>

#include "pvdis/error.hpp"
#include "pvdis/rng.hpp"
#include "pvdis/text.hpp"

namespace pvdis::data {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static const int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lengths[m - 1];
}

bool all_digits(std::string_view s) {
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    return !s.empty();
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

} // namespace

long Date::to_days() const {
    // Howard Hinnant's days_from_civil
    int y = year - (month <= 2);
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        static_cast<unsigned>((153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

Date Date::from_days(long days) {
    long z = days + 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

Date Date::parse(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !all_digits(s.substr(0, 4)) ||
        !all_digits(s.substr(5, 2)) || !all_digits(s.substr(8, 2))) {
        throw ParseError("invalid date '" + std::string(s) + "', expected YYYY-MM-DD");
    }
    Date date;
    date.year = static_cast<int>(text::parse_long(s.substr(0, 4), "date"));
    date.month = static_cast<int>(text::parse_long(s.substr(5, 2), "date"));
    date.day = static_cast<int>(text::parse_long(s.substr(8, 2), "date"));
    if (date.month < 1 || date.month > 12 || date.day < 1 ||
        date.day > days_in_month(date.year, date.month)) {
        throw ParseError("invalid calendar date '" + std::string(s) + "'");
    }
    return date;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

Season season_of(const Date& date, Hemisphere hemisphere) {
    const int m = date.month;
    Season south;
    if (m == 12 || m <= 2) south = Season::Summer;
    else if (m <= 5) south = Season::Autumn;
    else if (m <= 8) south = Season::Winter;
    else south = Season::Spring;
    if (hemisphere == Hemisphere::South) return south;
    return static_cast<Season>((static_cast<int>(south) + 2) % 4);
}

const char* season_name(Season s) {
    switch (s) {
        case Season::Summer: return "Summer";
        case Season::Autumn: return "Autumn";
        case Season::Winter: return "Winter";
        case Season::Spring: return "Spring";
    }
    return "?";
}

void DailySample::validate() const {
    if (net_load.size() != kSlotsPerDay) {
        throw ValidationError("sample " + prosumer_id + " " + date.to_string() +
                              ": net load length " + std::to_string(net_load.size()) +
                              ", expected " + std::to_string(kSlotsPerDay));
    }
    weather.validate(kSlotsPerDay);
    if (pv_truth && pv_truth->size() != kSlotsPerDay) {
        throw ValidationError("sample " + prosumer_id + " " + date.to_string() +
                              ": pv series length " + std::to_string(pv_truth->size()) +
                              ", expected " + std::to_string(kSlotsPerDay));
    }
    if (pv_truth && pv_truth->minCoeff() < 0.0) {
        throw ValidationError("sample " + prosumer_id + " " + date.to_string() +
                              ": negative pv generation");
    }
}

Vector NormStats::apply(const Vector& x, const ChannelStats& c) {
    return (x.array() - c.mean) / c.std;
}

Vector NormStats::invert(const Vector& z, const ChannelStats& c) {
    return z.array() * c.std + c.mean;
}

attn::WeatherDay NormStats::apply_weather(const attn::WeatherDay& w) const {
    return {apply(w.dni, dni), apply(w.dhi, dhi), apply(w.ghi, ghi)};
}

namespace {

ChannelStats fit_channel(const std::vector<const Vector*>& series, const char* name) {
    double sum = 0.0;
    long n = 0;
    for (const Vector* v : series) {
        sum += v->sum();
        n += v->size();
    }
    if (n == 0) throw ConfigError("zscore_fit: no data for channel " + std::string(name));
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const Vector* v : series) ss += (v->array() - mean).square().sum();
    const double std = std::sqrt(ss / static_cast<double>(n));
    if (std < 1e-9 * std::max(1.0, std::abs(mean))) {
        throw ConfigError("zscore_fit: channel '" + std::string(name) + "' has zero variance");
    }
    return {mean, std};
}

} // namespace

NormStats zscore_fit(const std::vector<DailySample>& train) {
    if (train.empty()) throw ConfigError("zscore_fit: empty training set");
    std::vector<const Vector*> net, dni, dhi, ghi;
    for (const DailySample& s : train) {
        net.push_back(&s.net_load);
        dni.push_back(&s.weather.dni);
        dhi.push_back(&s.weather.dhi);
        ghi.push_back(&s.weather.ghi);
    }
    NormStats stats;
    stats.net_load = fit_channel(net, "net_load");
    stats.dni = fit_channel(dni, "dni");
    stats.dhi = fit_channel(dhi, "dhi");
    stats.ghi = fit_channel(ghi, "ghi");
    return stats;
}

void ProsumerSplit::validate_for_training() const {
    if (p1.empty() || p2.empty()) {
        throw ConfigError("prosumer split: both P1 and P2 must be non-empty");
    }
    for (const std::string& id : p1) {
        if (p2.count(id)) throw ConfigError("prosumer split: '" + id + "' is in both P1 and P2");
    }
}

ProsumerSplit make_split(std::vector<std::string> ids, double p1_fraction, std::uint64_t seed) {
    if (p1_fraction < 0.0 || p1_fraction > 1.0) {
        throw ConfigError("prosumer split: fraction must be in [0, 1]");
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    rng::Engine eng(rng::mix(seed, 1001));
    eng.shuffle(ids);
    const std::size_t n1 = static_cast<std::size_t>(
        std::ceil(p1_fraction * static_cast<double>(ids.size()) - 1e-12));
    ProsumerSplit split;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        (i < n1 ? split.p1 : split.p2).insert(ids[i]);
    }
    return split;
}

namespace {

std::vector<std::string_view> csv_lines(const std::string& content) {
    std::vector<std::string_view> lines = text::split(content, '\n');
    while (!lines.empty() && text::trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

MeterCategory parse_category(std::string_view s, std::size_t line_no) {
    const std::string c = lower(text::trim(s));
    if (c == "gc") return MeterCategory::General;
    if (c == "cl") return MeterCategory::Controlled;
    if (c == "gg") return MeterCategory::Gross;
    throw ParseError("meter csv line " + std::to_string(line_no) + ": unknown category '" +
                     std::string(s) + "' (expected GC, CL or GG)");
}

} // namespace

std::vector<MeterRecord> load_meter_csv(const std::string& path) {
    const std::string content = text::read_file(path);
    const auto lines = csv_lines(content);
    if (lines.empty()) throw ParseError("meter csv " + path + ": empty file");

    const auto header = text::split(lines[0], ',');
    if (header.size() < 3 || lower(text::trim(header[0])) != "customer_id" ||
        lower(text::trim(header[1])) != "category" || lower(text::trim(header[2])) != "date") {
        throw ParseError("meter csv line 1: expected header customer_id,category,date,v1..v48");
    }
    const std::size_t value_cols = header.size() - 3;
    if (value_cols != static_cast<std::size_t>(kSlotsPerDay)) {
        throw ParseError("meter csv line 1: expected 48 value columns, got " +
                         std::to_string(value_cols));
    }

    std::vector<MeterRecord> records;
    std::set<std::tuple<std::string, long, int>> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (text::trim(lines[i]).empty()) continue;
        const auto fields = text::split(lines[i], ',');
        if (fields.size() != header.size()) {
            throw ParseError("meter csv line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " columns, got " +
                             std::to_string(fields.size()));
        }
        MeterRecord rec;
        rec.prosumer = std::string(text::trim(fields[0]));
        if (rec.prosumer.empty()) {
            throw ParseError("meter csv line " + std::to_string(line_no) + ": empty customer_id");
        }
        rec.category = parse_category(fields[1], line_no);
        try {
            rec.date = Date::parse(text::trim(fields[2]));
        } catch (const ParseError& e) {
            throw ParseError("meter csv line " + std::to_string(line_no) + ": " + e.what());
        }
        rec.values.resize(kSlotsPerDay);
        for (Index j = 0; j < kSlotsPerDay; ++j) {
            rec.values(j) = text::parse_double(
                text::trim(fields[static_cast<std::size_t>(j) + 3]),
                "meter csv line " + std::to_string(line_no) + " col " + std::to_string(j + 4));
        }
        const auto key = std::make_tuple(rec.prosumer, rec.date.to_days(),
                                         static_cast<int>(rec.category));
        if (!seen.insert(key).second) {
            throw ParseError("meter csv line " + std::to_string(line_no) +
                             ": duplicate (customer, date, category) row");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

namespace {

struct RawWeatherDay {
    std::array<std::optional<double>, 48> ghi, dni, dhi;
};

// "YYYY-MM-DD[T ]HH:MM[:SS]" -> (date, slot); minutes must be 00 or 30.
std::pair<Date, int> parse_timestamp(std::string_view s, std::size_t line_no) {
    const std::string where = "weather csv line " + std::to_string(line_no);
    if (s.size() < 16 || (s[10] != 'T' && s[10] != ' ')) {
        throw ParseError(where + ": invalid timestamp '" + std::string(s) + "'");
    }
    const Date date = Date::parse(s.substr(0, 10));
    const std::string_view time = s.substr(11);
    if (time.size() != 5 && !(time.size() == 8 && time.substr(5) == ":00")) {
        throw ParseError(where + ": invalid time of day '" + std::string(time) + "'");
    }
    if (time[2] != ':' || !all_digits(time.substr(0, 2)) || !all_digits(time.substr(3, 2))) {
        throw ParseError(where + ": invalid time of day '" + std::string(time) + "'");
    }
    const int hh = static_cast<int>(text::parse_long(time.substr(0, 2), where));
    const int mm = static_cast<int>(text::parse_long(time.substr(3, 2), where));
    if (hh > 23) throw ParseError(where + ": hour out of range");
    if (mm != 0 && mm != 30) {
        throw ParseError(where + ": minutes must be 00 or 30, got " + std::to_string(mm));
    }
    return {date, hh * 2 + (mm == 30 ? 1 : 0)};
}

Vector interpolate_hourly(const std::array<std::optional<double>, 48>& slots) {
    Vector out(kSlotsPerDay);
    for (int h = 0; h < 24; ++h) {
        out(2 * h) = *slots[static_cast<std::size_t>(2 * h)];
        if (h < 23) {
            out(2 * h + 1) = 0.5 * (*slots[static_cast<std::size_t>(2 * h)] +
                                    *slots[static_cast<std::size_t>(2 * h + 2)]);
        }
    }
    out(47) = *slots[46]; // final half hour held
    return out;
}

} // namespace

WeatherTable load_weather_csv(const std::string& path) {
    const std::string content = text::read_file(path);
    const auto lines = csv_lines(content);
    if (lines.empty()) throw ParseError("weather csv " + path + ": empty file");

    const auto header = text::split(lines[0], ',');
    if (header.size() != 4 || lower(text::trim(header[0])) != "timestamp" ||
        lower(text::trim(header[1])) != "ghi" || lower(text::trim(header[2])) != "dni" ||
        lower(text::trim(header[3])) != "dhi") {
        throw ParseError("weather csv line 1: expected header timestamp,ghi,dni,dhi");
    }

    std::map<Date, RawWeatherDay> raw;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (text::trim(lines[i]).empty()) continue;
        const auto fields = text::split(lines[i], ',');
        if (fields.size() != 4) {
            throw ParseError("weather csv line " + std::to_string(line_no) +
                             ": expected 4 columns, got " + std::to_string(fields.size()));
        }
        const auto [date, slot] = parse_timestamp(text::trim(fields[0]), line_no);
        double vals[3];
        for (int c = 0; c < 3; ++c) {
            vals[c] = text::parse_double(text::trim(fields[static_cast<std::size_t>(c) + 1]),
                                         "weather csv line " + std::to_string(line_no) + " col " +
                                             std::to_string(c + 2));
            if (vals[c] < 0.0) {
                throw ValidationError("weather csv line " + std::to_string(line_no) +
                                      ": negative irradiance " + text::format_double(vals[c]));
            }
        }
        RawWeatherDay& day = raw[date];
        const auto s = static_cast<std::size_t>(slot);
        if (day.ghi[s]) {
            throw ParseError("weather csv line " + std::to_string(line_no) +
                             ": duplicate timestamp");
        }
        day.ghi[s] = vals[0];
        day.dni[s] = vals[1];
        day.dhi[s] = vals[2];
    }

    WeatherTable table;
    for (const auto& [date, day] : raw) {
        bool all48 = true, hourly = true;
        for (int s = 0; s < 48; ++s) {
            const bool present = day.ghi[static_cast<std::size_t>(s)].has_value();
            if (!present) all48 = false;
            if (present != (s % 2 == 0)) hourly = false;
        }
        attn::WeatherDay w;
        if (all48) {
            w.ghi.resize(48);
            w.dni.resize(48);
            w.dhi.resize(48);
            for (int s = 0; s < 48; ++s) {
                w.ghi(s) = *day.ghi[static_cast<std::size_t>(s)];
                w.dni(s) = *day.dni[static_cast<std::size_t>(s)];
                w.dhi(s) = *day.dhi[static_cast<std::size_t>(s)];
            }
        } else if (hourly) {
            w.ghi = interpolate_hourly(day.ghi);
            w.dni = interpolate_hourly(day.dni);
            w.dhi = interpolate_hourly(day.dhi);
        } else {
            ++table.days_dropped;
            continue;
        }
        table.days.emplace(date, std::move(w));
    }
    return table;
}

namespace {

double percentile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    if (values.empty()) return 0.0;
    const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = rank - std::floor(rank);
    // exact when the endpoints coincide
    return values[lo] + frac * (values[hi] - values[lo]);
}

struct DayGroup {
    std::optional<Vector> gc, cl, gg;
};

} // namespace

AssembleResult assemble_days(std::vector<MeterRecord> meter, const WeatherTable& weather,
                             const ProsumerSplit& split, const AssembleOptions& opts) {
    std::sort(meter.begin(), meter.end(), [](const MeterRecord& a, const MeterRecord& b) {
        return std::tie(a.prosumer, a.date, a.category) <
               std::tie(b.prosumer, b.date, b.category);
    });

    std::map<std::pair<std::string, Date>, DayGroup> groups;
    long min_day = 0;
    bool first = true;
    for (MeterRecord& rec : meter) {
        if (!split.p1.count(rec.prosumer) && !split.p2.count(rec.prosumer)) {
            throw ConfigError("prosumer '" + rec.prosumer + "' is in neither P1 nor P2");
        }
        if (first || rec.date.to_days() < min_day) min_day = rec.date.to_days();
        first = false;
        DayGroup& g = groups[{rec.prosumer, rec.date}];
        std::optional<Vector>& slot = rec.category == MeterCategory::General ? g.gc
                                      : rec.category == MeterCategory::Controlled ? g.cl
                                                                                  : g.gg;
        if (slot) {
            throw ValidationError("duplicate meter record for " + rec.prosumer + " " +
                                  rec.date.to_string());
        }
        slot = std::move(rec.values);
    }

    AssembleResult result;

    std::set<std::string> filtered_out;
    if (opts.percentile_filter && !groups.empty()) {
        const long cutoff = min_day + 365;
        std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> totals;
        for (const auto& [key, g] : groups) {
            if (key.second.to_days() >= cutoff) continue;
            auto& [cons, gen] = totals[key.first];
            if (g.gc) cons.push_back(g.gc->sum() + (g.cl ? g.cl->sum() : 0.0));
            if (g.gg) gen.push_back(g.gg->sum());
        }
        std::vector<double> mean_cons, mean_gen;
        std::vector<std::string> ids;
        for (const auto& [id, t] : totals) {
            ids.push_back(id);
            const auto mean = [](const std::vector<double>& v) {
                return v.empty() ? 0.0
                                 : std::accumulate(v.begin(), v.end(), 0.0) /
                                       static_cast<double>(v.size());
            };
            mean_cons.push_back(mean(t.first));
            mean_gen.push_back(mean(t.second));
        }
        const double c_lo = percentile(mean_cons, opts.filter_lo);
        const double c_hi = percentile(mean_cons, opts.filter_hi);
        const double g_lo = percentile(mean_gen, opts.filter_lo);
        const double g_hi = percentile(mean_gen, opts.filter_hi);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (mean_cons[i] < c_lo || mean_cons[i] > c_hi || mean_gen[i] < g_lo ||
                mean_gen[i] > g_hi) {
                filtered_out.insert(ids[i]);
            }
        }
        result.prosumers_filtered.assign(filtered_out.begin(), filtered_out.end());
    }

    for (const auto& [key, g] : groups) {
        const auto& [prosumer, date] = key;
        if (filtered_out.count(prosumer)) continue;
        if (!g.gc || !g.gg) {
            ++result.days_dropped_meter;
            continue;
        }
        const auto wit = weather.days.find(date);
        if (wit == weather.days.end()) {
            ++result.days_dropped_weather;
            continue;
        }
        DailySample sample;
        sample.prosumer_id = prosumer;
        sample.date = date;
        sample.weather = wit->second;
        const Vector cl = g.cl ? *g.cl : Vector(Vector::Zero(kSlotsPerDay));
        sample.net_load = *g.gc + cl - *g.gg;
        if (split.p1.count(prosumer)) {
            if (g.gg->minCoeff() < 0.0) {
                throw ValidationError("negative gross generation for " + prosumer + " " +
                                      date.to_string());
            }
            sample.pv_truth = *g.gg;
        }
        sample.validate();
        result.dataset.samples.push_back(std::move(sample));
    }
    return result;
}

std::array<Dataset, 4> seasonal_split(const Dataset& dataset, Hemisphere hemisphere) {
    std::array<Dataset, 4> seasons;
    for (const DailySample& s : dataset.samples) {
        seasons[static_cast<std::size_t>(season_of(s.date, hemisphere))].samples.push_back(s);
    }
    return seasons;
}

double quantize_kwh(double x) { return std::round(x * 1048576.0) / 1048576.0; }

namespace {

struct ProsumerTraits {
    double capacity;
    double base;
    double morning_center, morning_amp, morning_width;
    double evening_center, evening_amp, evening_width;
};

} // namespace

SynthResult synth_generate(int n_prosumers, int n_days, std::uint64_t seed, double noise_kwh) {
    if (n_prosumers < 1 || n_days < 1) {
        throw ConfigError("synth_generate: prosumer and day counts must be >= 1");
    }
    rng::Engine eng(rng::mix(seed, 2002));

    std::vector<ProsumerTraits> traits;
    traits.reserve(static_cast<std::size_t>(n_prosumers));
    for (int i = 0; i < n_prosumers; ++i) {
        ProsumerTraits t;
        t.capacity = eng.uniform(1.0, 3.0); // kW
        t.base = eng.uniform(0.15, 0.40);   // kWh per slot
        t.morning_center = eng.uniform(13.0, 17.0);
        t.morning_amp = eng.uniform(0.2, 0.6);
        t.morning_width = eng.uniform(2.0, 4.0);
        t.evening_center = eng.uniform(35.0, 41.0);
        t.evening_amp = eng.uniform(0.3, 0.9);
        t.evening_width = eng.uniform(3.0, 6.0);
        traits.push_back(t);
    }

    const Date start{2011, 1, 1};
    struct DayWeather {
        attn::WeatherDay w;
        Vector pv_shape; // ghi / 1000 * 0.5, kWh per slot per kW of capacity
    };
    std::vector<DayWeather> days;
    days.reserve(static_cast<std::size_t>(n_days));
    for (int d = 0; d < n_days; ++d) {
        const double clearness = eng.uniform(0.1, 1.0);
        // diffuse fraction varies with cloud character independently of the
        // day's total irradiance
        const double direct_share = eng.uniform(0.2, 0.85);
        DayWeather dw;
        dw.w.ghi = Vector::Zero(kSlotsPerDay);
        dw.w.dni = Vector::Zero(kSlotsPerDay);
        dw.w.dhi = Vector::Zero(kSlotsPerDay);
        dw.pv_shape = Vector::Zero(kSlotsPerDay);
        for (Index t = 12; t <= 39; ++t) {
            const double x = static_cast<double>(t - 12) / 27.0;
            const double bell = std::sin(x * 3.14159265358979323846);
            const double raw = clearness * 1000.0 * bell;
            dw.w.dni(t) = direct_share * raw;
            dw.w.dhi(t) = (1.0 - direct_share) * raw;
            // stored GHI is the sum of its shares, so the identity is exact
            dw.w.ghi(t) = dw.w.dni(t) + dw.w.dhi(t);
            dw.pv_shape(t) = dw.w.ghi(t) / 1000.0 * 0.5;
        }
        days.push_back(std::move(dw));
    }

    SynthResult result;
    char id_buf[16];
    for (int i = 0; i < n_prosumers; ++i) {
        std::snprintf(id_buf, sizeof(id_buf), "s%04d", i);
        const ProsumerTraits& t = traits[static_cast<std::size_t>(i)];
        for (int d = 0; d < n_days; ++d) {
            const DayWeather& dw = days[static_cast<std::size_t>(d)];
            DailySample sample;
            sample.prosumer_id = id_buf;
            sample.date = Date::from_days(start.to_days() + d);
            sample.weather = dw.w;

            Vector consumption(kSlotsPerDay);
            Vector pv(kSlotsPerDay);
            for (Index s = 0; s < kSlotsPerDay; ++s) {
                const double ts = static_cast<double>(s);
                double u = t.base;
                u += t.morning_amp * std::exp(-0.5 * std::pow((ts - t.morning_center) /
                                                              t.morning_width, 2.0));
                u += t.evening_amp * std::exp(-0.5 * std::pow((ts - t.evening_center) /
                                                              t.evening_width, 2.0));
                u += eng.normal(0.0, noise_kwh);
                consumption(s) = quantize_kwh(std::max(u, 0.02));
                pv(s) = quantize_kwh(t.capacity * dw.pv_shape(s));
            }
            sample.net_load = consumption - pv;
            sample.pv_truth = pv;
            result.dataset.samples.push_back(std::move(sample));
            result.consumption.push_back(std::move(consumption));
        }
    }
    // canonical (prosumer, date) order; consumption rows move in lockstep
    std::vector<std::size_t> perm(result.dataset.samples.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        const DailySample& sa = result.dataset.samples[a];
        const DailySample& sb = result.dataset.samples[b];
        return std::tie(sa.prosumer_id, sa.date) < std::tie(sb.prosumer_id, sb.date);
    });
    SynthResult sorted;
    sorted.dataset.samples.reserve(perm.size());
    sorted.consumption.reserve(perm.size());
    for (std::size_t idx : perm) {
        sorted.dataset.samples.push_back(std::move(result.dataset.samples[idx]));
        sorted.consumption.push_back(std::move(result.consumption[idx]));
    }
    return sorted;
}

namespace {

void append_series(std::string& out, const char* tag, const Vector& v) {
    out += tag;
    for (Index i = 0; i < v.size(); ++i) {
        out += ' ';
        out += text::format_double(v(i));
    }
    out += '\n';
}

Vector parse_series(std::string_view line, const char* tag, std::size_t line_no) {
    const auto fields = text::split(text::trim(line), ' ');
    const std::string where = "dataset line " + std::to_string(line_no);
    if (fields.empty() || fields[0] != tag) {
        throw ParseError(where + ": expected '" + tag + "' series");
    }
    if (fields.size() != static_cast<std::size_t>(kSlotsPerDay) + 1) {
        throw ParseError(where + ": expected " + std::to_string(kSlotsPerDay) +
                         " values, got " + std::to_string(fields.size() - 1));
    }
    Vector v(kSlotsPerDay);
    for (Index i = 0; i < kSlotsPerDay; ++i) {
        v(i) = text::parse_double(fields[static_cast<std::size_t>(i) + 1], where);
    }
    return v;
}

constexpr const char* kDatasetMagic = "pvdis-dataset 1";

} // namespace

std::string dataset_to_string(const Dataset& dataset) {
    std::string out;
    out += kDatasetMagic;
    out += "\nT 48\nunits kwh_per_slot wm2\ncount ";
    out += std::to_string(dataset.samples.size());
    out += '\n';
    for (const DailySample& s : dataset.samples) {
        s.validate();
        if (s.prosumer_id.find_first_of(" \t\n") != std::string::npos) {
            throw ValidationError("prosumer id contains whitespace: '" + s.prosumer_id + "'");
        }
        out += "sample ";
        out += s.prosumer_id;
        out += ' ';
        out += s.date.to_string();
        out += s.pv_truth ? " 1\n" : " 0\n";
        append_series(out, "net", s.net_load);
        append_series(out, "dni", s.weather.dni);
        append_series(out, "dhi", s.weather.dhi);
        append_series(out, "ghi", s.weather.ghi);
        if (s.pv_truth) append_series(out, "pv", *s.pv_truth);
    }
    return out;
}

Dataset dataset_from_string(const std::string& content, const std::string& origin) {
    const auto lines = csv_lines(content);
    std::size_t i = 0;
    const auto need = [&](const char* what) -> std::string_view {
        if (i >= lines.size()) {
            throw ParseError("dataset " + origin + ": unexpected end of file, expected " + what);
        }
        return lines[i++];
    };
    if (text::trim(need("magic line")) != kDatasetMagic) {
        throw ParseError("dataset " + origin + ": not a canonical dataset file");
    }
    if (text::trim(need("T line")) != "T 48") {
        throw ParseError("dataset " + origin + ": unsupported slot count (expected 'T 48')");
    }
    if (text::trim(need("units line")) != "units kwh_per_slot wm2") {
        throw ParseError("dataset " + origin + ": unexpected units line");
    }
    const auto count_fields = text::split(text::trim(need("count line")), ' ');
    if (count_fields.size() != 2 || count_fields[0] != "count") {
        throw ParseError("dataset " + origin + ": expected 'count N'");
    }
    const long n = text::parse_long(count_fields[1], "dataset count");

    Dataset dataset;
    dataset.samples.reserve(static_cast<std::size_t>(n));
    for (long rec = 0; rec < n; ++rec) {
        const std::size_t line_no = i + 1;
        const auto fields = text::split(text::trim(need("sample header")), ' ');
        if (fields.size() != 4 || fields[0] != "sample" || !(fields[3] == "0" || fields[3] == "1")) {
            throw ParseError("dataset line " + std::to_string(line_no) +
                             ": expected 'sample <id> <date> <0|1>'");
        }
        DailySample s;
        s.prosumer_id = std::string(fields[1]);
        s.date = Date::parse(fields[2]);
        const bool has_truth = fields[3] == "1";
        s.net_load = parse_series(need("net series"), "net", i);
        s.weather.dni = parse_series(need("dni series"), "dni", i);
        s.weather.dhi = parse_series(need("dhi series"), "dhi", i);
        s.weather.ghi = parse_series(need("ghi series"), "ghi", i);
        if (has_truth) s.pv_truth = parse_series(need("pv series"), "pv", i);
        s.validate();
        dataset.samples.push_back(std::move(s));
    }
    if (i != lines.size()) {
        throw ParseError("dataset " + origin + ": trailing content at line " +
                         std::to_string(i + 1));
    }
    return dataset;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    text::write_file(path, dataset_to_string(dataset));
}

Dataset load_dataset(const std::string& path) {
    return dataset_from_string(text::read_file(path), path);
}

bool is_dataset_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::string line;
    std::getline(in, line);
    return std::string_view(text::trim(line)) == kDatasetMagic;
}

} // namespace pvdis::data
