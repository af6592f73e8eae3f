#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hydrovalue/ingest.hpp"
#include "hydrovalue/mdp.hpp"

namespace hydrovalue {

/// Everything one pipeline run needs. Defaults are the case-study instance.
struct RunConfig {
    std::filesystem::path inflow_csv;
    std::filesystem::path output_dir = "hydrovalue-out";
    double inflow_to_mw = 1.0; // multiplier applied to the CSV inflow column

    std::vector<double> levels{0.10, 0.50, 0.90};
    int quantile_harmonics = 2;
    int transition_harmonics = 1;
    double bin_mw = 100.0;
    int pool_weeks = 2;

    SystemConfig system;

    double lp_tolerance = 1e-9;
    int lp_max_iterations = 200;
    double support_tol = 1e-9;

    int sim_years = 10000;
    std::uint64_t sim_seed = 20240601;
    int sim_warmup_years = 5;

    // Synthetic inflow used when no CSV is supplied.
    SeasonalInflowParams synthetic;
    int synthetic_years = 74;
    std::uint64_t synthetic_seed = 1948;

    RunConfig();

    /// Throws ValidationError.
    void validate() const;
};

/// Synthetic stand-in for the case-study record: mean 700 MW, seasonal
/// amplitude 500 MW with the dry season centred on week 33, AR(1) noise.
SeasonalInflowParams case_study_synthetic();

std::string run_config_to_json(const RunConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const std::string& text);

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& config);

/// FNV-1a hash of the canonical JSON of every field that affects results
/// (paths excluded).
std::string config_hash(const RunConfig& config);

/// "0.1,0.5,0.9" -> {0.1, 0.5, 0.9}; throws ValidationError.
std::vector<double> parse_levels(const std::string& text);

} // namespace hydrovalue
