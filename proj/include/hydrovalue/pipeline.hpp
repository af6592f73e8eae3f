#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hydrovalue/bundle.hpp"
#include "hydrovalue/config.hpp"
#include "hydrovalue/ingest.hpp"
#include "hydrovalue/mdp.hpp"
#include "hydrovalue/policy_pricing.hpp"

namespace hydrovalue {

/// Reads config.inflow_csv, or synthesizes the configured record when the
/// path is empty.
InflowSeries load_or_synthesize(const RunConfig& config);

QuantileFamily fit_quantiles(const InflowSeries& series, const RunConfig& config);

/// Regimes, transition MLE and inflow histograms on top of a quantile family.
InflowBundle fit_bundle(const InflowSeries& series, const QuantileFamily& family, const RunConfig& config);

PricingOptions pricing_options(const RunConfig& config);

struct SolveReport {
    PolicySolution primal;
    ValueSolution values;
    ModelDimensions dims;
    double duality_gap = 0.0;          // |u_primal - u_dual|
    double relative_duality_gap = 0.0; // duality_gap / (1 + |u_primal|)
    double support_fraction = 0.0;     // supported states / |S|
    double solve_seconds = 0.0;
};

/// Primal solve plus values and the diagnostics the summary reports.
SolveReport solve_model(const MdpModel& model, const RunConfig& config);

/// What `simulate` and `export-figures` need from a solve.
struct SavedSolution {
    std::string config_hash;
    double u = 0.0;
    double u_dual = 0.0;
    int anchor = 0;
    std::vector<int> action;
    std::vector<double> mass;
    std::vector<double> v;
};

SavedSolution saved_solution(const SolveReport& report, const std::string& config_hash);
void save_solution(const std::filesystem::path& path, const SavedSolution& solution);
SavedSolution load_solution(const std::filesystem::path& path);

} // namespace hydrovalue
