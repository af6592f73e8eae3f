#include "hydrovalue/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "hydrovalue/bundle.hpp"
#include "hydrovalue/error.hpp"
#include "json.hpp"

namespace hydrovalue {

using nlohmann::json;

SeasonalInflowParams case_study_synthetic() {
    SeasonalInflowParams p;
    p.mean_mw = 700.0;
    p.amplitude_mw = 500.0;
    p.phase_rad = -0.712; // seasonal minimum at t = 224 days (week 33)
    p.noise_sd_mw = 100.0;
    p.noise_ar1 = 0.8;
    p.first_year = 1948;
    return p;
}

RunConfig::RunConfig() : synthetic(case_study_synthetic()) {}

void RunConfig::validate() const {
    if (!(inflow_to_mw > 0.0)) throw ValidationError("config: inflow_to_mw must be positive");
    if (levels.empty()) throw ValidationError("config: at least one quantile level is required");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0 && levels[i] < 1.0)) throw ValidationError("config: quantile levels must lie in (0, 1)");
        if (i > 0 && !(levels[i] > levels[i - 1])) throw ValidationError("config: quantile levels must increase");
    }
    if (quantile_harmonics < 0 || transition_harmonics < 0) throw ValidationError("config: harmonics must be >= 0");
    if (!(bin_mw > 0.0)) throw ValidationError("config: bin_mw must be positive");
    if (pool_weeks < 0 || pool_weeks > 25) throw ValidationError("config: pool_weeks must be in 0..25");
    system.validate();
    if (std::abs(bin_mw - system.block_mw) > 1e-12 * system.block_mw) {
        throw ValidationError("config: bin_mw must equal system.block_mw");
    }
    if (!(lp_tolerance > 0.0) || lp_max_iterations < 1) throw ValidationError("config: invalid LP settings");
    if (!(support_tol > 0.0)) throw ValidationError("config: support_tol must be positive");
    if (sim_years < 1 || sim_warmup_years < 0) throw ValidationError("config: invalid simulation length");
    if (synthetic_years < 1) throw ValidationError("config: synthetic_years must be positive");
    if (!(synthetic.noise_ar1 >= 0.0 && synthetic.noise_ar1 < 1.0)) throw ValidationError("config: noise_ar1 must be in [0, 1)");
}

namespace {

json system_json(const SystemConfig& s) {
    return {{"storage_blocks", s.storage_blocks},
            {"block_mw", s.block_mw},
            {"turbine_blocks", s.turbine_blocks},
            {"run_of_river_mw", s.run_of_river_mw},
            {"demand_mw", s.demand_mw},
            {"thermal_capacity_mw", s.thermal_capacity_mw},
            {"fuel_price", s.fuel_price},
            {"curtailment_price", s.curtailment_price},
            {"hours_per_week", s.hours_per_week}};
}

json synthetic_json(const RunConfig& c) {
    return {{"mean_mw", c.synthetic.mean_mw},
            {"amplitude_mw", c.synthetic.amplitude_mw},
            {"phase_rad", c.synthetic.phase_rad},
            {"noise_sd_mw", c.synthetic.noise_sd_mw},
            {"noise_ar1", c.synthetic.noise_ar1},
            {"omega", c.synthetic.omega},
            {"first_year", c.synthetic.first_year},
            {"years", c.synthetic_years},
            {"seed", c.synthetic_seed}};
}

json model_json(const RunConfig& c) {
    return {{"inflow_to_mw", c.inflow_to_mw},
            {"levels", c.levels},
            {"quantile_harmonics", c.quantile_harmonics},
            {"transition_harmonics", c.transition_harmonics},
            {"bin_mw", c.bin_mw},
            {"pool_weeks", c.pool_weeks},
            {"system", system_json(c.system)},
            {"solver", {{"lp_tolerance", c.lp_tolerance}, {"lp_max_iterations", c.lp_max_iterations}, {"support_tol", c.support_tol}}},
            {"simulation", {{"years", c.sim_years}, {"seed", c.sim_seed}, {"warmup_years", c.sim_warmup_years}}},
            {"synthetic", synthetic_json(c)}};
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ValidationError("config: '" + where + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw ValidationError("config: unknown key '" + where + key + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("config: bad value for '") + key + "'");
    }
}

} // namespace

std::string run_config_to_json(const RunConfig& c) {
    json j = model_json(c);
    j["inflow_csv"] = c.inflow_csv.string();
    j["output_dir"] = c.output_dir.string();
    return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    reject_unknown(j,
                   {"inflow_csv", "output_dir", "inflow_to_mw", "levels", "quantile_harmonics", "transition_harmonics",
                    "bin_mw", "pool_weeks", "system", "solver", "simulation", "synthetic"},
                   "");
    RunConfig c;
    std::string path;
    if (j.contains("inflow_csv")) {
        read(j, "inflow_csv", path);
        c.inflow_csv = path;
    }
    if (j.contains("output_dir")) {
        read(j, "output_dir", path);
        c.output_dir = path;
    }
    read(j, "inflow_to_mw", c.inflow_to_mw);
    read(j, "levels", c.levels);
    read(j, "quantile_harmonics", c.quantile_harmonics);
    read(j, "transition_harmonics", c.transition_harmonics);
    read(j, "bin_mw", c.bin_mw);
    read(j, "pool_weeks", c.pool_weeks);
    if (j.contains("system")) {
        const json& s = j["system"];
        reject_unknown(s,
                       {"storage_blocks", "block_mw", "turbine_blocks", "run_of_river_mw", "demand_mw",
                        "thermal_capacity_mw", "fuel_price", "curtailment_price", "hours_per_week"},
                       "system.");
        read(s, "storage_blocks", c.system.storage_blocks);
        read(s, "block_mw", c.system.block_mw);
        read(s, "turbine_blocks", c.system.turbine_blocks);
        read(s, "run_of_river_mw", c.system.run_of_river_mw);
        read(s, "demand_mw", c.system.demand_mw);
        read(s, "thermal_capacity_mw", c.system.thermal_capacity_mw);
        read(s, "fuel_price", c.system.fuel_price);
        read(s, "curtailment_price", c.system.curtailment_price);
        read(s, "hours_per_week", c.system.hours_per_week);
    }
    if (j.contains("solver")) {
        const json& s = j["solver"];
        reject_unknown(s, {"lp_tolerance", "lp_max_iterations", "support_tol"}, "solver.");
        read(s, "lp_tolerance", c.lp_tolerance);
        read(s, "lp_max_iterations", c.lp_max_iterations);
        read(s, "support_tol", c.support_tol);
    }
    if (j.contains("simulation")) {
        const json& s = j["simulation"];
        reject_unknown(s, {"years", "seed", "warmup_years"}, "simulation.");
        read(s, "years", c.sim_years);
        read(s, "seed", c.sim_seed);
        read(s, "warmup_years", c.sim_warmup_years);
    }
    if (j.contains("synthetic")) {
        const json& s = j["synthetic"];
        reject_unknown(s, {"mean_mw", "amplitude_mw", "phase_rad", "noise_sd_mw", "noise_ar1", "omega", "first_year", "years", "seed"},
                       "synthetic.");
        read(s, "mean_mw", c.synthetic.mean_mw);
        read(s, "amplitude_mw", c.synthetic.amplitude_mw);
        read(s, "phase_rad", c.synthetic.phase_rad);
        read(s, "noise_sd_mw", c.synthetic.noise_sd_mw);
        read(s, "noise_ar1", c.synthetic.noise_ar1);
        read(s, "omega", c.synthetic.omega);
        read(s, "first_year", c.synthetic.first_year);
        read(s, "years", c.synthetic_years);
        read(s, "seed", c.synthetic_seed);
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return run_config_from_json(ss.str());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void save_run_config(const std::filesystem::path& path, const RunConfig& config) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write config file " + path.string());
    out << run_config_to_json(config);
}

std::string config_hash(const RunConfig& config) {
    return fnv1a_hex(model_json(config).dump());
}

std::vector<double> parse_levels(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError("invalid quantile level '" + item + "'");
        }
    }
    if (out.empty()) throw ValidationError("no quantile levels given");
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(out[i] > 0.0 && out[i] < 1.0)) throw ValidationError("quantile levels must lie in (0, 1)");
        if (i > 0 && !(out[i] > out[i - 1])) throw ValidationError("quantile levels must increase");
    }
    return out;
}

} // namespace hydrovalue
