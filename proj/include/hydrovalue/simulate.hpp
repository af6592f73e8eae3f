#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hydrovalue/bundle.hpp"
#include "hydrovalue/mdp.hpp"

namespace hydrovalue {

/// Replacement demand or fuel price per week. Length 52 repeats every year;
/// length years * 52 covers the whole measured horizon. Empty keeps the
/// model's constant value.
struct SimulationOverrides {
    std::vector<double> demand_mw;
    std::vector<double> fuel_price;
};

struct SimulationOptions {
    int years = 10000;
    std::uint64_t seed = 20240601;
    int warmup_years = 5;
    SimulationOverrides overrides;
    /// Number of leading measured years to keep week by week.
    int trajectory_years = 0;
};

struct LevelStats {
    double mean = 0.0;
    int min = 0;
    int max = 0;
};

struct TrajectoryStep {
    int year = 0; // measured year, 0-based
    int week = 1;
    int regime = 1;
    int level = 0;
    double inflow_mw = 0.0;
    int release_blocks = 0;
    int spill_blocks = 0;
    double cost = 0.0;
};

struct SimulationResult {
    int years = 0;
    std::vector<double> year_cost;   // $ per measured year
    double mean_weekly_cost = 0.0;   // $/week
    double mean_annual_cost = 0.0;   // $/year
    double standard_error = 0.0;     // of mean_weekly_cost: sd(year means) / sqrt(years)
    std::int64_t curtailment_weeks = 0;
    std::int64_t spill_weeks = 0;
    std::int64_t fallback_weeks = 0; // steps taken in states outside the policy support
    std::array<LevelStats, kWeeksPerYear> levels{};
    /// Total variation distance between the visited-state frequencies and the
    /// reference occupancy; negative when no reference was given.
    double occupancy_tv = -1.0;
    std::vector<TrajectoryStep> trajectory;
};

/// Follows `action` (one entry per state, kUnsupported allowed) week by week
/// along one continuous trajectory that starts at half capacity in the median
/// regime in week 1. Each simulated year draws from its own generator seeded
/// by (seed, year index); within a week the inflow is drawn before the next
/// regime. Unsupported states borrow the action of the nearest supported
/// level in the same (regime, week), lower level on ties, else release 0.
SimulationResult simulate_policy(const MdpModel& model, const InflowBundle& bundle, const std::vector<int>& action,
                                 const SimulationOptions& options = {},
                                 const std::vector<double>* reference_occupancy = nullptr);

} // namespace hydrovalue
