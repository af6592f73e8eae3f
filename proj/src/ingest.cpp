#include "hydrovalue/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "hydrovalue/error.hpp"
#include "hydrovalue/fourier.hpp"

namespace hydrovalue {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
    if (field.empty()) return false;
    if (field.front() == '+') field.remove_prefix(1);
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace

InflowSeries InflowSeries::from_records(std::vector<InflowRecord> records) {
    InflowSeries series;
    if (records.empty()) return series;

    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.week < 1 || r.week > kWeeksPerYear) {
            throw ValidationError("record " + std::to_string(i + 1) + ": week out of range: " +
                                  std::to_string(r.week));
        }
        if (!std::isfinite(r.inflow_mw) || r.inflow_mw < 0.0) {
            throw ValidationError("record " + std::to_string(i + 1) +
                                  ": negative or non-finite inflow");
        }
        if (i > 0) {
            const auto& p = records[i - 1];
            if (p.year == r.year && p.week == r.week) {
                throw ValidationError("duplicate (year, week): (" + std::to_string(r.year) + ", " +
                                      std::to_string(r.week) + ")");
            }
            if (std::pair(p.year, p.week) > std::pair(r.year, r.week)) {
                throw ValidationError("records out of order at (" + std::to_string(r.year) + ", " +
                                      std::to_string(r.week) + ")");
            }
        }
    }

    if (records.front().week != 1) {
        throw ValidationError("series must start at week 1 (first record is week " +
                              std::to_string(records.front().week) + ")");
    }
    const int y0 = records.front().year;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& r = records[i];
        const long index = static_cast<long>(r.year - y0) * kWeeksPerYear + (r.week - 1);
        if (index != static_cast<long>(i)) {
            throw ValidationError("gap in weekly series before (" + std::to_string(r.year) + ", " +
                                  std::to_string(r.week) + ")");
        }
        r.t_days = kDaysPerWeek * static_cast<double>(index);
    }

    series.partial_final_year_ = records.back().week != kWeeksPerYear;
    series.records_ = std::move(records);
    return series;
}

InflowUnits InflowUnits::parse(std::string_view spec) {
    InflowUnits units;
    if (spec == "mw") {
        units.name = "mw";
        units.to_mw = 1.0;
    } else if (spec == "gwh-per-week") {
        units.name = "gwh-per-week";
        units.to_mw = 1000.0 / (kDaysPerWeek * 24.0);
    } else if (spec.starts_with("cumecs:")) {
        double factor = 0.0;
        if (!parse_number(spec.substr(7), factor) || !(factor > 0.0)) {
            throw ValidationError("bad cumecs conversion factor in '" + std::string(spec) + "'");
        }
        units.name = std::string(spec);
        units.to_mw = factor;
    } else {
        throw ValidationError("unknown inflow units '" + std::string(spec) +
                              "' (expected mw, gwh-per-week or cumecs:<factor>)");
    }
    return units;
}

InflowSeries load_inflow_csv(const std::filesystem::path& path, double to_mw) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open inflow file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
    {
        const auto header = split_commas(line);
        if (header.size() != 3 || header[0] != "year" || header[1] != "week" ||
            header[2] != "inflow") {
            throw ValidationError(path.string() + ": expected header 'year,week,inflow'");
        }
    }

    std::vector<InflowRecord> records;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_commas(line);
        InflowRecord rec;
        double inflow = 0.0;
        if (fields.size() != 3 || !parse_number(fields[0], rec.year) ||
            !parse_number(fields[1], rec.week) || !parse_number(fields[2], inflow)) {
            throw ValidationError(path.string() + ": malformed row " + std::to_string(row));
        }
        if (rec.week < 1 || rec.week > kWeeksPerYear) {
            throw ValidationError(path.string() + ": row " + std::to_string(row) +
                                  ": week out of range: " + std::to_string(rec.week));
        }
        if (inflow < 0.0 || !std::isfinite(inflow)) {
            throw ValidationError(path.string() + ": row " + std::to_string(row) +
                                  ": negative inflow");
        }
        rec.inflow_mw = inflow * to_mw;
        records.push_back(rec);
    }
    return InflowSeries::from_records(std::move(records));
}

void write_inflow_csv(const std::filesystem::path& path, const InflowSeries& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "year,week,inflow\n";
    for (const auto& r : series.records()) {
        out << r.year << ',' << r.week << ',' << format_double(r.inflow_mw) << '\n';
    }
}

InflowSeries truncate_year53(std::vector<DatedRecord> raw) {
    std::map<int, std::map<int, double>> by_year;
    for (const auto& r : raw) {
        if (r.week < 1 || r.week > kWeeksPerYear + 1) {
            throw ValidationError("week out of range: " + std::to_string(r.week));
        }
        auto [it, inserted] = by_year[r.year].emplace(r.week, r.inflow_mw);
        if (!inserted) {
            throw ValidationError("duplicate (year, week): (" + std::to_string(r.year) + ", " +
                                  std::to_string(r.week) + ")");
        }
    }

    std::vector<InflowRecord> records;
    const int last_year = by_year.empty() ? 0 : by_year.rbegin()->first;
    for (auto& [year, weeks] : by_year) {
        std::vector<int> missing;
        for (int w = 1; w <= kWeeksPerYear; ++w) {
            if (!weeks.contains(w)) missing.push_back(w);
        }
        const bool final_partial = year == last_year && !missing.empty() &&
                                   missing.front() > 1 &&
                                   missing.back() - missing.front() + 1 ==
                                       static_cast<int>(missing.size()) &&
                                   missing.back() == kWeeksPerYear;
        if (!missing.empty() && !final_partial) {
            std::ostringstream msg;
            msg << "year " << year << " has " << (kWeeksPerYear - missing.size())
                << " of 52 weeks; missing:";
            for (int w : missing) msg << ' ' << w;
            throw ValidationError(msg.str());
        }
        if (auto it = weeks.find(kWeeksPerYear + 1); it != weeks.end()) {
            weeks[kWeeksPerYear] = 0.5 * (weeks[kWeeksPerYear] + it->second);
            weeks.erase(it);
        }
        for (const auto& [week, inflow] : weeks) {
            records.push_back({year, week, 0.0, inflow});
        }
    }
    return InflowSeries::from_records(std::move(records));
}

InflowSeries synthesize_inflow(const SeasonalInflowParams& params, int years, std::uint64_t seed) {
    if (years < 1) throw ValidationError("synthesize_inflow: years must be >= 1");
    if (params.noise_sd_mw < 0.0) throw ValidationError("synthesize_inflow: noise_sd must be >= 0");
    if (params.noise_ar1 < 0.0 || params.noise_ar1 >= 1.0) {
        throw ValidationError("synthesize_inflow: noise_ar1 must lie in [0, 1)");
    }
    const double omega = params.omega > 0.0 ? params.omega : kAnnualOmega;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double innovation = std::sqrt(1.0 - params.noise_ar1 * params.noise_ar1);

    std::vector<InflowRecord> records;
    records.reserve(static_cast<std::size_t>(years) * kWeeksPerYear);
    double noise = params.noise_sd_mw > 0.0 ? params.noise_sd_mw * normal(rng) : 0.0;
    for (int y = 0; y < years; ++y) {
        for (int w = 1; w <= kWeeksPerYear; ++w) {
            const double t = kDaysPerWeek * static_cast<double>(y * kWeeksPerYear + w - 1);
            if (params.noise_sd_mw > 0.0 && !(y == 0 && w == 1)) {
                noise = params.noise_ar1 * noise + innovation * params.noise_sd_mw * normal(rng);
            }
            const double value = params.mean_mw +
                                 params.amplitude_mw * std::cos(omega * t + params.phase_rad) +
                                 noise;
            records.push_back({params.first_year + y, w, t, std::max(0.0, value)});
        }
    }
    return InflowSeries::from_records(std::move(records));
}

} // namespace hydrovalue
