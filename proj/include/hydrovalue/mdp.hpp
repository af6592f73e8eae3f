#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hydrovalue/bundle.hpp"

namespace hydrovalue {

/// Reservoir and system parameters. Powers in MW, prices in $/MWh.
struct SystemConfig {
    int storage_blocks = 50; // levels 0..storage_blocks
    double block_mw = 100.0;
    int turbine_blocks = 9; // actions 0..turbine_blocks
    double run_of_river_mw = 500.0;
    double demand_mw = 1400.0;
    double thermal_capacity_mw = 900.0;
    double fuel_price = 50.0;
    double curtailment_price = 1000.0;
    /// Converts MW-level costs into $/week.
    double hours_per_week = 168.0;

    int num_levels() const { return storage_blocks + 1; }
    int num_actions() const { return turbine_blocks + 1; }
    double block_energy_mwh() const { return block_mw * hours_per_week; }
    void validate() const;
};

struct State {
    int level = 0;  // 0..storage_blocks
    int regime = 1; // 1..|R|
    int week = 1;   // 1..52

    bool operator==(const State&) const = default;
};

/// Flat index ((week-1)*|R| + (regime-1))*(L+1) + level.
struct StateIndex {
    int num_levels = 1;
    int num_regimes = 1;

    int size() const { return num_levels * num_regimes * kWeeksPerYear; }
    int flat(const State& s) const {
        return ((s.week - 1) * num_regimes + (s.regime - 1)) * num_levels + s.level;
    }
    State state(int flat_index) const {
        State s;
        s.level = flat_index % num_levels;
        const int rest = flat_index / num_levels;
        s.regime = rest % num_regimes + 1;
        s.week = rest / num_regimes + 1;
        return s;
    }
};

/// Finite average-cost MDP with a sparse kernel. Row k = s * |A| + a of the
/// CSR arrays lists the successors of (s, a) in ascending order.
struct MdpModel {
    int num_states = 0;
    int num_actions = 0;
    std::vector<std::int64_t> row_start; // size |S|*|A| + 1
    std::vector<int> next_state;
    std::vector<double> probability;
    std::vector<double> cost; // size |S|*|A|, $/week

    /// Present for reservoir models; generic models leave it empty.
    std::optional<SystemConfig> config;
    StateIndex index;
    std::string config_hash;

    std::size_t nonzeros() const { return next_state.size(); }
    std::int64_t pair(int s, int a) const { return static_cast<std::int64_t>(s) * num_actions + a; }

    /// Checks dimensions, probabilities in [0, 1] summing to 1 within `tol`,
    /// and successor indices in range. Throws ValidationError.
    void validate(double tol = 1e-10) const;
};

/// Hydro delivered in a week: run-of-river min(inflow, cap) plus release.
double run_of_river(const SystemConfig& config, double inflow_mw);

/// [clamp(demand - h, 0, thermal) * fuel + max(demand - thermal - h, 0) * curtail] * hours.
double weekly_cost(const SystemConfig& config, double delivered_hydro_mw);

/// One week of reservoir operation with integer blocks.
struct StepOutcome {
    int next_level = 0;
    int release_blocks = 0;
    int spill_blocks = 0;
    double hydro_mw = 0.0;
    double cost = 0.0;
    bool curtailed = false;
};

/// Release is capped at the available water (level + inflow); storage above
/// capacity spills.
StepOutcome reservoir_step(const SystemConfig& config, int level, int action, double inflow_mw);

/// Kernel p(s'|s,a) = p(f|r,t) p(r'|r,t) with t = 7 (week - 1); cost is the
/// expectation over the inflow histogram.
MdpModel build_model(const SystemConfig& config, const InflowBundle& bundle);

struct ModelDimensions {
    int states = 0;
    int actions = 0;
    std::int64_t variables = 0;
    int equality_rows = 0;
    std::size_t nonzeros = 0;
};

/// Counts for the state-action LP. Nonzeros require building the kernel and
/// are only filled when `bundle` is given.
ModelDimensions model_dimensions(const SystemConfig& config, int num_regimes, const InflowBundle* bundle = nullptr);

/// Binary dump: one JSON header line, then costs and (s, a, s', p) records.
void write_model(const std::filesystem::path& path, const MdpModel& model);
MdpModel read_model(const std::filesystem::path& path);

} // namespace hydrovalue
