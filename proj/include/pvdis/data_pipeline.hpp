#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pvdis/attention_encoder.hpp"
#include "pvdis/types.hpp"

namespace pvdis::data {

struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    /// Days since 1970-01-01 (civil calendar).
    long to_days() const;
    static Date from_days(long days);
    Date next_day() const { return from_days(to_days() + 1); }

    static Date parse(std::string_view s); // strict YYYY-MM-DD
    std::string to_string() const;
};

enum class Season { Summer = 0, Autumn = 1, Winter = 2, Spring = 3 };
enum class Hemisphere { South, North };

/// Meteorological seasons; southern hemisphere by default elsewhere
/// (Summer = Dec-Feb, Autumn = Mar-May, Winter = Jun-Aug, Spring = Sep-Nov).
Season season_of(const Date& date, Hemisphere hemisphere);
const char* season_name(Season s);

/// One prosumer-day: weather inputs, net load, and PV ground truth when the
/// prosumer's meter records generation separately.
struct DailySample {
    std::string prosumer_id;
    Date date;
    attn::WeatherDay weather;
    Vector net_load;                // kWh per half-hour; negative when exporting
    std::optional<Vector> pv_truth; // kWh per half-hour, >= 0

    void validate() const;
};

struct Dataset {
    std::vector<DailySample> samples;
};

struct ChannelStats {
    double mean = 0.0;
    double std = 1.0;
};

/// Per-channel Z-score transform, fit on training data only.
struct NormStats {
    ChannelStats net_load;
    ChannelStats dni;
    ChannelStats dhi;
    ChannelStats ghi;

    static Vector apply(const Vector& x, const ChannelStats& c);
    static Vector invert(const Vector& z, const ChannelStats& c);
    attn::WeatherDay apply_weather(const attn::WeatherDay& w) const;
};

NormStats zscore_fit(const std::vector<DailySample>& train);

/// Type-1 (PV generation observed) vs Type-2 (net load only) prosumers.
struct ProsumerSplit {
    std::set<std::string> p1;
    std::set<std::string> p2;

    void validate_for_training() const; // disjoint and both non-empty
};

/// Seeded split: ids are sorted, shuffled deterministically, and the first
/// ceil(p1_fraction * n) become Type 1.
ProsumerSplit make_split(std::vector<std::string> ids, double p1_fraction, std::uint64_t seed);

enum class MeterCategory { General, Controlled, Gross };

struct MeterRecord {
    std::string prosumer;
    Date date;
    MeterCategory category;
    Vector values; // 48 half-hour readings, kWh
};

/// Columns: customer_id, category (GC|CL|GG), date (YYYY-MM-DD), v1..v48.
std::vector<MeterRecord> load_meter_csv(const std::string& path);

struct WeatherTable {
    std::map<Date, attn::WeatherDay> days;
    int days_dropped = 0; // incomplete days beyond interpolation
};

/// Columns: timestamp (ISO-8601), ghi, dni, dhi in W/m^2. Half-hourly days
/// are used as-is; hourly days are upsampled by linear interpolation with
/// the final half hour held.
WeatherTable load_weather_csv(const std::string& path);

struct AssembleOptions {
    bool percentile_filter = false;
    double filter_lo = 1.0;  // percentile bounds on first-year daily totals
    double filter_hi = 99.0;
};

struct AssembleResult {
    Dataset dataset;
    int days_dropped_meter = 0;   // missing GC or GG coverage
    int days_dropped_weather = 0; // no weather for the date
    std::vector<std::string> prosumers_filtered;
};

/// net_load = (general + controlled) - gross generation; pv_truth = gross
/// generation for Type-1 prosumers. Records are sorted by (prosumer, date)
/// before assembly, so the result does not depend on input order.
AssembleResult assemble_days(std::vector<MeterRecord> meter, const WeatherTable& weather,
                             const ProsumerSplit& split, const AssembleOptions& opts = {});

/// Partition by season; indices follow the Season enum.
std::array<Dataset, 4> seasonal_split(const Dataset& dataset, Hemisphere hemisphere);

struct SynthResult {
    Dataset dataset;
    // actual consumption per sample, aligned with dataset.samples; kept out
    // of the dataset because real meters never record it
    std::vector<Vector> consumption;
};

/// Deterministic synthetic world with full ground truth: per-day clear-sky
/// irradiance scaled by a cloudiness draw, per-prosumer PV capacity, and a
/// smooth consumption profile with morning/evening bumps plus noise. All
/// stored series are quantized to 2^-20 kWh so sums and differences are
/// exact in 64-bit floats.
SynthResult synth_generate(int n_prosumers, int n_days, std::uint64_t seed,
                           double noise_kwh = 0.04);

/// Rounds to the 2^-20 kWh meter grid. Sums and differences of values on
/// this grid are exact in 64-bit floats at household magnitudes, which the
/// energy-balance identities rely on.
double quantize_kwh(double x);

std::string dataset_to_string(const Dataset& dataset);
Dataset dataset_from_string(const std::string& content, const std::string& origin);
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

/// True when the file starts with the canonical dataset magic line.
bool is_dataset_file(const std::string& path);

} // namespace pvdis::data
