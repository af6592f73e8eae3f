#include "hydrovalue/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hydrovalue/error.hpp"
#include "hydrovalue/quantile_fit.hpp"
#include "hydrovalue/regime_chain.hpp"
#include "json.hpp"

namespace hydrovalue {

using nlohmann::json;

InflowSeries load_or_synthesize(const RunConfig& config) {
    if (config.inflow_csv.empty()) return synthesize_inflow(config.synthetic, config.synthetic_years, config.synthetic_seed);
    return load_inflow_csv(config.inflow_csv, config.inflow_to_mw);
}

QuantileFamily fit_quantiles(const InflowSeries& series, const RunConfig& config) {
    return fit_quantile_family(series, config.levels, FourierBasis{kAnnualOmega, config.quantile_harmonics});
}

InflowBundle fit_bundle(const InflowSeries& series, const QuantileFamily& family, const RunConfig& config) {
    InflowBundle b;
    b.quantiles = family;
    const RegimeSeries regimes = assign_regimes(series, family);
    TransitionFit fit = fit_transition_mle(regimes, FourierBasis{kAnnualOmega, config.transition_harmonics});
    b.transitions = std::move(fit.model);
    b.log_likelihood = fit.log_likelihood;
    b.homogeneous_log_likelihood = fit.homogeneous_log_likelihood;
    b.histogram = fit_conditional_hist(regimes, config.bin_mw, config.pool_weeks);
    for (const auto& m : family.models) b.coverage.push_back(empirical_coverage(series, m));
    b.config_hash = config_hash(config);
    return b;
}

PricingOptions pricing_options(const RunConfig& config) {
    PricingOptions o;
    o.lp.tolerance = config.lp_tolerance;
    o.lp.max_iterations = config.lp_max_iterations;
    o.support_tol = config.support_tol;
    return o;
}

SolveReport solve_model(const MdpModel& model, const RunConfig& config) {
    SolveReport r;
    const auto t0 = std::chrono::steady_clock::now();
    r.primal = solve_primal(model, pricing_options(config));
    r.values = values_from_primal(model, r.primal, config.support_tol);
    r.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.duality_gap = std::abs(r.primal.u - r.values.u);
    r.relative_duality_gap = r.duality_gap / (1.0 + std::abs(r.primal.u));
    r.support_fraction = static_cast<double>(r.primal.supported_states()) / model.num_states;
    r.dims.states = model.num_states;
    r.dims.actions = model.num_actions;
    r.dims.variables = static_cast<std::int64_t>(model.num_states) * model.num_actions;
    r.dims.equality_rows = model.num_states + 1;
    r.dims.nonzeros = model.nonzeros();
    return r;
}

SavedSolution saved_solution(const SolveReport& report, const std::string& hash) {
    SavedSolution s;
    s.config_hash = hash;
    s.u = report.primal.u;
    s.u_dual = report.values.u;
    s.anchor = report.values.anchor;
    s.action = report.primal.action;
    s.mass = report.primal.mass;
    s.v.assign(report.values.v.data(), report.values.v.data() + report.values.v.size());
    return s;
}

void save_solution(const std::filesystem::path& path, const SavedSolution& s) {
    json j{{"format", "hydrovalue-solution"},
           {"config_hash", s.config_hash},
           {"u", s.u},
           {"u_dual", s.u_dual},
           {"anchor", s.anchor},
           {"action", s.action},
           {"mass", s.mass},
           {"v", s.v}};
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write solution file: " + path.string());
    out << j.dump() << '\n';
}

SavedSolution load_solution(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open solution file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    SavedSolution s;
    try {
        const json j = json::parse(ss.str());
        if (j.value("format", "") != "hydrovalue-solution") throw ValidationError("solution: unrecognized format tag");
        s.config_hash = j.at("config_hash").get<std::string>();
        s.u = j.at("u").get<double>();
        s.u_dual = j.at("u_dual").get<double>();
        s.anchor = j.at("anchor").get<int>();
        s.action = j.at("action").get<std::vector<int>>();
        s.mass = j.at("mass").get<std::vector<double>>();
        s.v = j.at("v").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    if (s.mass.size() != s.action.size() || s.v.size() != s.action.size()) {
        throw ValidationError(path.string() + ": solution arrays have different lengths");
    }
    return s;
}

} // namespace hydrovalue
