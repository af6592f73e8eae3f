#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hydrovalue/quantile_fit.hpp"
#include "hydrovalue/regime_chain.hpp"

namespace hydrovalue {

/// Everything the decision model needs to know about inflows.
struct InflowBundle {
    QuantileFamily quantiles;
    TransitionModel transitions;
    ConditionalInflowDist histogram;
    std::string config_hash;

    // Fit diagnostics, informational only.
    double log_likelihood = 0.0;
    double homogeneous_log_likelihood = 0.0;
    std::vector<double> coverage;

    int num_regimes() const { return transitions.num_regimes; }
};

void save_bundle(const std::filesystem::path& path, const InflowBundle& bundle);
InflowBundle load_bundle(const std::filesystem::path& path);

std::string bundle_to_json(const InflowBundle& bundle, int indent = 1);
InflowBundle bundle_from_json(const std::string& text);

/// Standalone quantile family file: {format, config_hash, omega, harmonics, levels, beta}.
std::string quantiles_to_json(const QuantileFamily& family, const std::string& config_hash);
QuantileFamily quantiles_from_json(const std::string& text);

/// 64-bit FNV-1a digest as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

} // namespace hydrovalue
