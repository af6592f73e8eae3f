#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hydrovalue {

inline constexpr int kWeeksPerYear = 52;
inline constexpr double kDaysPerWeek = 7.0;

/// One week of observed inflow, expressed as average MW over the week.
struct InflowRecord {
    int year = 0;
    int week = 0;        // 1..52
    double t_days = 0.0; // 7 * (global week index - 1)
    double inflow_mw = 0.0;

    bool operator==(const InflowRecord&) const = default;
};

/// Weekly inflow series normalized to 52-week years.
///
/// Records are strictly ordered by (year, week) and contiguous; only the
/// final year may be incomplete, in which case `partial_final_year` is set.
class InflowSeries {
public:
    InflowSeries() = default;

    /// Validates ordering, contiguity and ranges, and recomputes t_days.
    static InflowSeries from_records(std::vector<InflowRecord> records);

    const std::vector<InflowRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const InflowRecord& operator[](std::size_t i) const { return records_[i]; }
    bool partial_final_year() const { return partial_final_year_; }

private:
    std::vector<InflowRecord> records_;
    bool partial_final_year_ = false;
};

/// Multiplier turning source units into average MW over the week.
struct InflowUnits {
    std::string name = "mw";
    double to_mw = 1.0;

    /// Accepts `mw`, `gwh-per-week` or `cumecs:<MW per m^3/s>`.
    static InflowUnits parse(std::string_view spec);
};

/// Reads a `year,week,inflow` CSV, converting inflow to MW.
InflowSeries load_inflow_csv(const std::filesystem::path& path, double to_mw = 1.0);

/// Writes the series in the same schema. Values use shortest round-trip
/// formatting so that load(write(s)) reproduces `s` bit for bit.
void write_inflow_csv(const std::filesystem::path& path, const InflowSeries& series);

/// Calendar-dated weekly observation; week may be 53 in long years.
struct DatedRecord {
    int year = 0;
    int week = 0; // 1..53
    double inflow_mw = 0.0;
};

/// Maps each calendar year onto exactly 52 weeks, averaging a 53rd week
/// into week 52. Years with fewer than 52 weeks are rejected, except the
/// final year which may be partial.
InflowSeries truncate_year53(std::vector<DatedRecord> raw);

/// Parameters of the seasonal synthetic inflow generator.
///
/// inflow = max(0, mean + amplitude * cos(omega * t + phase) + noise_t), with
/// noise an AR(1) process of stationary standard deviation `noise_sd`.
struct SeasonalInflowParams {
    double mean_mw = 500.0;
    double amplitude_mw = 0.0;
    double phase_rad = 0.0;
    double noise_sd_mw = 0.0;
    double noise_ar1 = 0.0; // week-to-week noise correlation, in [0, 1)
    double omega = 0.0;     // rad/day; 0 selects 2*pi/365.25
    int first_year = 1948;
};

InflowSeries synthesize_inflow(const SeasonalInflowParams& params, int years, std::uint64_t seed);

} // namespace hydrovalue
