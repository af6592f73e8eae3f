// hydrovalue: fit -> build -> solve -> simulate -> export pipeline.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "hydrovalue/bundle.hpp"
#include "hydrovalue/config.hpp"
#include "hydrovalue/error.hpp"
#include "hydrovalue/pipeline.hpp"
#include "hydrovalue/quantile_fit.hpp"
#include "hydrovalue/regime_chain.hpp"
#include "hydrovalue/simulate.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace hydrovalue;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;
constexpr int kExitAcceptance = 3;

std::string num(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct Common {
    std::string config_path;
    std::string out_dir;
    std::string inflow;
    std::string inflow_units;
    std::string levels;
    std::optional<int> quantile_harmonics;
    std::optional<int> transition_harmonics;
    std::string bundle;
    std::string quantiles;
    std::string model;
    std::string solution;
    std::optional<int> years;
    std::optional<std::uint64_t> seed;
    std::optional<int> warmup;
    int trajectory_years = 0;
    std::string weeks;
};

RunConfig resolve_config(const Common& c) {
    RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path);
    if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
    if (!c.inflow.empty()) cfg.inflow_csv = c.inflow;
    if (!c.inflow_units.empty()) cfg.inflow_to_mw = InflowUnits::parse(c.inflow_units).to_mw;
    if (!c.levels.empty()) cfg.levels = parse_levels(c.levels);
    if (c.quantile_harmonics) cfg.quantile_harmonics = *c.quantile_harmonics;
    if (c.transition_harmonics) cfg.transition_harmonics = *c.transition_harmonics;
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    return cfg;
}

fs::path out_path(const RunConfig& cfg, const std::string& name) { return cfg.output_dir / name; }

fs::path input_path(const std::string& given, const RunConfig& cfg, const std::string& fallback) {
    const fs::path p = given.empty() ? out_path(cfg, fallback) : fs::path(given);
    if (!fs::exists(p)) throw ValidationError("input file not found: " + p.string());
    return p;
}

// Records which config produced each written file.
void record_outputs(const RunConfig& cfg, const std::string& command, const std::vector<fs::path>& files) {
    const fs::path manifest = out_path(cfg, "manifest.json");
    json j = json::object();
    if (fs::exists(manifest)) {
        std::ifstream in(manifest);
        try {
            j = json::parse(in);
        } catch (const json::exception&) {
            j = json::object();
        }
    }
    for (const auto& f : files) {
        j["files"][f.filename().string()] = {{"command", command}, {"config_hash", config_hash(cfg)}};
    }
    std::ofstream out(manifest);
    out << j.dump(2) << '\n';
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void check_hash(const std::string& what, const std::string& stored, const RunConfig& cfg) {
    if (!stored.empty() && stored != config_hash(cfg)) {
        std::cerr << "note: " << what << " was produced with config hash " << stored << ", current config is "
                  << config_hash(cfg) << '\n';
    }
}

InflowSeries read_series(const RunConfig& cfg) {
    if (cfg.inflow_csv.empty()) {
        std::cout << "inflow: synthetic record, " << cfg.synthetic_years << " years, seed " << cfg.synthetic_seed << '\n';
    } else {
        std::cout << "inflow: " << cfg.inflow_csv.string() << '\n';
    }
    const InflowSeries s = load_or_synthesize(cfg);
    std::cout << "records: " << s.size() << (s.partial_final_year() ? " (final year partial)" : "") << '\n';
    return s;
}

void print_coverage(const QuantileFamily& family, const InflowSeries& series) {
    for (const auto& m : family.models) {
        std::cout << "quantile " << num(m.alpha) << ": coverage " << num(empirical_coverage(series, m)) << '\n';
    }
}

MdpModel model_from(const Common& c, const RunConfig& cfg, InflowBundle* bundle_out = nullptr) {
    if (!c.model.empty()) {
        if (!fs::exists(c.model)) throw ValidationError("input file not found: " + c.model);
        MdpModel m = read_model(c.model);
        check_hash("model", m.config_hash, cfg);
        return m;
    }
    const fs::path bpath = input_path(c.bundle, cfg, "bundle.json");
    InflowBundle b = load_bundle(bpath);
    check_hash("bundle", b.config_hash, cfg);
    MdpModel m = build_model(cfg.system, b);
    m.config_hash = config_hash(cfg);
    if (bundle_out) *bundle_out = std::move(b);
    return m;
}

int cmd_synthesize(const Common& c) {
    RunConfig cfg = resolve_config(c);
    if (c.years) cfg.synthetic_years = *c.years;
    if (c.seed) cfg.synthetic_seed = *c.seed;
    cfg.validate();
    const InflowSeries s = synthesize_inflow(cfg.synthetic, cfg.synthetic_years, cfg.synthetic_seed);
    const fs::path p = out_path(cfg, "inflow.csv");
    write_inflow_csv(p, s);
    record_outputs(cfg, "synthesize", {p});
    std::cout << "wrote " << p.string() << " (" << s.size() << " weeks)\n";
    return kExitOk;
}

int cmd_fit_quantiles(const Common& c) {
    const RunConfig cfg = resolve_config(c);
    const InflowSeries s = read_series(cfg);
    const QuantileFamily family = fit_quantiles(s, cfg);
    print_coverage(family, s);
    const fs::path p = out_path(cfg, "quantiles.json");
    std::ofstream(p) << quantiles_to_json(family, config_hash(cfg)) << '\n';
    record_outputs(cfg, "fit-quantiles", {p});
    std::cout << "wrote " << p.string() << '\n';
    return kExitOk;
}

void report_bundle(const InflowBundle& b) {
    std::cout << "regimes: " << b.num_regimes() << '\n';
    std::cout << "log-likelihood: " << num(b.log_likelihood) << " (homogeneous " << num(b.homogeneous_log_likelihood)
              << ")\n";
}

int finish_bundle(const RunConfig& cfg, const InflowBundle& b, const char* command) {
    report_bundle(b);
    const fs::path p = out_path(cfg, "bundle.json");
    save_bundle(p, b);
    record_outputs(cfg, command, {p});
    std::cout << "wrote " << p.string() << '\n';
    return kExitOk;
}

int cmd_fit_chain(const Common& c) {
    const RunConfig cfg = resolve_config(c);
    const InflowSeries s = read_series(cfg);
    const fs::path qpath = input_path(c.quantiles, cfg, "quantiles.json");
    std::ifstream in(qpath);
    std::stringstream ss;
    ss << in.rdbuf();
    const QuantileFamily family = quantiles_from_json(ss.str());
    return finish_bundle(cfg, fit_bundle(s, family, cfg), "fit-chain");
}

int cmd_fit(const Common& c) {
    const RunConfig cfg = resolve_config(c);
    const InflowSeries s = read_series(cfg);
    const QuantileFamily family = fit_quantiles(s, cfg);
    print_coverage(family, s);
    return finish_bundle(cfg, fit_bundle(s, family, cfg), "fit");
}

void print_dimensions(const MdpModel& m) {
    std::cout << "states |S|: " << m.num_states << '\n';
    std::cout << "actions |A|: " << m.num_actions << '\n';
    std::cout << "LP variables: " << static_cast<std::int64_t>(m.num_states) * m.num_actions << '\n';
    std::cout << "LP equality rows: " << m.num_states + 1 << '\n';
    std::cout << "kernel nonzeros: " << m.nonzeros() << '\n';
}

int cmd_build(const Common& c) {
    const RunConfig cfg = resolve_config(c);
    const MdpModel m = model_from(c, cfg);
    print_dimensions(m);
    const fs::path p = out_path(cfg, "model.bin");
    write_model(p, m);
    record_outputs(cfg, "build", {p});
    std::cout << "wrote " << p.string() << '\n';
    return kExitOk;
}

int cmd_solve(const Common& c) {
    const RunConfig cfg = resolve_config(c);
    const MdpModel m = model_from(c, cfg);
    print_dimensions(m);
    const SolveReport r = solve_model(m, cfg);

    const fs::path policy = out_path(cfg, "policy.csv");
    const fs::path values = out_path(cfg, "values.csv");
    const fs::path curves = out_path(cfg, "offer_curves.csv");
    const fs::path solution = out_path(cfg, "solution.json");
    const fs::path summary = out_path(cfg, "summary.json");
    write_policy_csv(policy, policy_table(r.primal, m));
    write_values_csv(values, r.values, m, &r.primal);
    write_offer_curves_csv(curves, offer_curves(r.values, m, &r.primal));
    save_solution(solution, saved_solution(r, config_hash(cfg)));

    const json s{{"config_hash", config_hash(cfg)},
                 {"states", r.dims.states},
                 {"actions", r.dims.actions},
                 {"lp_variables", r.dims.variables},
                 {"lp_equality_rows", r.dims.equality_rows},
                 {"u_per_week", r.primal.u},
                 {"u_per_year", r.primal.u_annual},
                 {"u_dual", r.values.u},
                 {"duality_gap", r.duality_gap},
                 {"relative_duality_gap", r.relative_duality_gap},
                 {"supported_states", r.primal.supported_states()},
                 {"support_fraction", r.support_fraction},
                 {"multi_action_states", r.primal.multi_action_states},
                 {"deterministic_vertex", r.primal.basic},
                 {"max_dual_violation", r.values.max_violation},
                 {"max_complementarity", r.values.max_complementarity}};
    write_json(summary, s);
    record_outputs(cfg, "solve", {policy, values, curves, solution, summary});

    std::cout << "u per week: " << num(r.primal.u) << " $\n";
    std::cout << "u per year: " << num(r.primal.u_annual) << " $\n";
    std::cout << "duality gap: " << num(r.relative_duality_gap) << " (absolute " << num(r.duality_gap) << ")\n";
    std::cout << "support fraction: " << num(r.support_fraction) << " (" << r.primal.supported_states() << " states)\n";
    std::cout << "multi-action states: " << r.primal.multi_action_states << '\n';
    std::cout << "solve time: " << num(r.solve_seconds) << " s\n";
    std::cout << "wrote " << cfg.output_dir.string() << "/{policy.csv,values.csv,offer_curves.csv,solution.json,summary.json}\n";
    if (!(r.relative_duality_gap <= 1e-6)) {
        std::cerr << "acceptance: duality gap above 1e-6\n";
        return kExitAcceptance;
    }
    return kExitOk;
}

int cmd_simulate(const Common& c) {
    RunConfig cfg = resolve_config(c);
    if (c.years) cfg.sim_years = *c.years;
    if (c.seed) cfg.sim_seed = *c.seed;
    if (c.warmup) cfg.sim_warmup_years = *c.warmup;
    cfg.validate();
    InflowBundle b;
    Common mc = c;
    mc.model.clear();
    const MdpModel m = model_from(mc, cfg, &b);
    const SavedSolution sol = load_solution(input_path(c.solution, cfg, "solution.json"));
    if (static_cast<int>(sol.action.size()) != m.num_states) {
        throw ValidationError("solution does not match the model (" + std::to_string(sol.action.size()) + " vs " +
                              std::to_string(m.num_states) + " states)");
    }
    SimulationOptions opt;
    opt.years = cfg.sim_years;
    opt.seed = cfg.sim_seed;
    opt.warmup_years = cfg.sim_warmup_years;
    opt.trajectory_years = c.trajectory_years;
    const SimulationResult res = simulate_policy(m, b, sol.action, opt, &sol.mass);

    const double diff = res.mean_weekly_cost - sol.u;
    // Round-off allowance for deterministic instances, where the SE is zero.
    const bool within = std::abs(diff) <= 3.0 * res.standard_error + 1e-9 * (1.0 + std::abs(sol.u));
    json levels = json::array();
    for (int w = 0; w < kWeeksPerYear; ++w) {
        const auto& l = res.levels[static_cast<std::size_t>(w)];
        levels.push_back({{"week", w + 1}, {"mean", l.mean}, {"min", l.min}, {"max", l.max}});
    }
    const json j{{"config_hash", config_hash(cfg)},
                 {"years", res.years},
                 {"seed", opt.seed},
                 {"warmup_years", opt.warmup_years},
                 {"u_per_week", sol.u},
                 {"mean_weekly_cost", res.mean_weekly_cost},
                 {"mean_annual_cost", res.mean_annual_cost},
                 {"standard_error", res.standard_error},
                 {"difference_in_se", res.standard_error > 0.0 ? diff / res.standard_error : 0.0},
                 {"within_3se", within},
                 {"curtailment_weeks", res.curtailment_weeks},
                 {"spill_weeks", res.spill_weeks},
                 {"fallback_weeks", res.fallback_weeks},
                 {"occupancy_tv", res.occupancy_tv},
                 {"levels", levels}};
    const fs::path p = out_path(cfg, "simulation.json");
    write_json(p, j);
    std::vector<fs::path> written{p};
    if (c.trajectory_years > 0) {
        const fs::path t = out_path(cfg, "trajectory.csv");
        std::ofstream out(t);
        out << "year,week,regime,level,inflow_mw,release_blocks,spill_blocks,cost\n";
        for (const auto& s : res.trajectory) {
            out << s.year << ',' << s.week << ',' << s.regime << ',' << s.level << ',' << num(s.inflow_mw) << ','
                << s.release_blocks << ',' << s.spill_blocks << ',' << num(s.cost) << '\n';
        }
        written.push_back(t);
    }
    record_outputs(cfg, "simulate", written);

    std::cout << "simulated years: " << res.years << " (seed " << opt.seed << ")\n";
    std::cout << "mean weekly cost: " << num(res.mean_weekly_cost) << " $ (SE " << num(res.standard_error) << ")\n";
    std::cout << "LP gain u: " << num(sol.u) << " $\n";
    std::cout << "occupancy TV distance: " << num(res.occupancy_tv) << '\n';
    std::cout << "wrote " << p.string() << '\n';
    if (!within) {
        std::cerr << "acceptance: simulated cost differs from u by more than 3 standard errors\n";
        return kExitAcceptance;
    }
    return kExitOk;
}

std::vector<int> parse_int_list(const std::string& text, int lo, int hi, const char* what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        int v = 0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (res.ec != std::errc{} || res.ptr != item.data() + item.size() || v < lo || v > hi) {
            throw ValidationError(std::string("invalid ") + what + " '" + item + "'");
        }
        out.push_back(v);
    }
    return out;
}

int cmd_export_figures(const Common& c) {
    const RunConfig cfg = resolve_config(c);
    const InflowSeries series = read_series(cfg);
    InflowBundle b;
    Common mc = c;
    mc.model.clear();
    const MdpModel m = model_from(mc, cfg, &b);
    const SavedSolution sol = load_solution(input_path(c.solution, cfg, "solution.json"));
    if (static_cast<int>(sol.v.size()) != m.num_states) throw ValidationError("solution does not match the model");
    const std::vector<int> weeks = c.weeks.empty() ? std::vector<int>{} : parse_int_list(c.weeks, 1, kWeeksPerYear, "week");

    // Inflow record with fitted quantiles and regimes.
    const fs::path f1 = out_path(cfg, "fig1_inflow.csv");
    {
        std::vector<double> t;
        for (const auto& r : series.records()) t.push_back(r.t_days);
        const QuantileGrid g = enforce_noncrossing(b.quantiles, t);
        const RegimeSeries reg = assign_regimes(series, b.quantiles);
        std::ofstream out(f1);
        out << "year,week,t_days,inflow_mw,regime";
        for (double a : b.quantiles.levels) out << ",q" << num(a);
        out << '\n';
        for (std::size_t i = 0; i < series.size(); ++i) {
            const auto& r = series[i];
            out << r.year << ',' << r.week << ',' << num(r.t_days) << ',' << num(r.inflow_mw) << ','
                << reg.entries[i].regime;
            for (Eigen::Index k = 0; k < g.values.cols(); ++k) out << ',' << num(g.values(static_cast<Eigen::Index>(i), k));
            out << '\n';
        }
    }
    // One seasonal cycle of the quantile curves.
    const fs::path f1c = out_path(cfg, "fig1_quantile_curves.csv");
    {
        std::vector<double> t;
        for (int d = 0; d < 365; ++d) t.push_back(d);
        const QuantileGrid g = enforce_noncrossing(b.quantiles, t);
        std::ofstream out(f1c);
        out << "day";
        for (double a : b.quantiles.levels) out << ",q" << num(a);
        out << '\n';
        for (int d = 0; d < 365; ++d) {
            out << d;
            for (Eigen::Index k = 0; k < g.values.cols(); ++k) out << ',' << num(g.values(d, k));
            out << '\n';
        }
    }

    PolicySolution primal;
    primal.action = sol.action;
    primal.mass = sol.mass;
    ValueSolution values;
    values.u = sol.u_dual;
    values.anchor = sol.anchor;
    values.v = Eigen::Map<const Eigen::VectorXd>(sol.v.data(), static_cast<Eigen::Index>(sol.v.size()));

    const fs::path f2 = out_path(cfg, "fig2_values.csv");
    {
        std::ofstream out(f2);
        out << "week,regime,level,v_dollars,supported,release_mw\n";
        for (int w = 1; w <= kWeeksPerYear; ++w) {
            if (!weeks.empty() && std::find(weeks.begin(), weeks.end(), w) == weeks.end()) continue;
            for (int r = 1; r <= m.index.num_regimes; ++r) {
                for (int l = 0; l < m.index.num_levels; ++l) {
                    const int s = m.index.flat({l, r, w});
                    const int a = sol.action[static_cast<std::size_t>(s)];
                    out << w << ',' << r << ',' << l << ',' << num(sol.v[static_cast<std::size_t>(s)]) << ','
                        << (a != kUnsupported ? 1 : 0) << ',';
                    if (a != kUnsupported) out << num(a * cfg.system.block_mw);
                    out << '\n';
                }
            }
        }
    }
    const fs::path f3 = out_path(cfg, "fig3_offer_curves.csv");
    write_offer_curves_csv(f3, offer_curves(values, m, &primal, weeks));
    record_outputs(cfg, "export-figures", {f1, f1c, f2, f3});
    std::cout << "wrote " << f1.string() << ", " << f1c.string() << ", " << f2.string() << ", " << f3.string() << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Baseline policies and water-value offer curves for a hydropower reservoir"};
    app.require_subcommand(1);
    Common c;
    app.add_option("-c,--config", c.config_path, "JSON run configuration (defaults: case study)");
    app.add_option("-o,--out", c.out_dir, "Output directory (overrides the config)");

    auto add_inflow = [&c](CLI::App* sub) {
        sub->add_option("--inflow", c.inflow, "Weekly inflow CSV (year,week,inflow); synthetic record if omitted");
        sub->add_option("--inflow-units", c.inflow_units, "mw, gwh-per-week or cumecs:<MW per m^3/s>");
    };
    auto add_quantile_opts = [&c](CLI::App* sub) {
        sub->add_option("--levels", c.levels, "Quantile levels, e.g. 0.10,0.50,0.90");
        sub->add_option("--harmonics", c.quantile_harmonics, "Fourier harmonics of the quantile curves");
    };
    auto add_bundle = [&c](CLI::App* sub) { sub->add_option("--bundle", c.bundle, "Inflow bundle (default <out>/bundle.json)"); };
    auto add_solution = [&c](CLI::App* sub) {
        sub->add_option("--solution", c.solution, "Solution file (default <out>/solution.json)");
    };

    std::map<CLI::App*, std::function<int(const Common&)>> handlers;

    auto* syn = app.add_subcommand("synthesize", "Write the configured synthetic inflow record as CSV");
    syn->add_option("--years", c.years, "Number of years");
    syn->add_option("--seed", c.seed, "Random seed");
    handlers[syn] = cmd_synthesize;

    auto* fq = app.add_subcommand("fit-quantiles", "Fit seasonal quantile curves");
    add_inflow(fq);
    add_quantile_opts(fq);
    handlers[fq] = cmd_fit_quantiles;

    auto* fc = app.add_subcommand("fit-chain", "Fit the regime chain and inflow histograms on fitted quantiles");
    add_inflow(fc);
    fc->add_option("--quantiles", c.quantiles, "Quantile file (default <out>/quantiles.json)");
    fc->add_option("--harmonics", c.transition_harmonics, "Fourier harmonics of the transition probabilities");
    handlers[fc] = cmd_fit_chain;

    auto* fit = app.add_subcommand("fit", "Fit quantiles, regime chain and histograms");
    add_inflow(fit);
    add_quantile_opts(fit);
    fit->add_option("--chain-harmonics", c.transition_harmonics, "Fourier harmonics of the transition probabilities");
    handlers[fit] = cmd_fit;

    auto* build = app.add_subcommand("build", "Build the decision model and report its dimensions");
    add_bundle(build);
    handlers[build] = cmd_build;

    auto* solve = app.add_subcommand("solve", "Solve for the optimal policy, values and offer curves");
    add_bundle(solve);
    solve->add_option("--model", c.model, "Prebuilt model file instead of a bundle");
    handlers[solve] = cmd_solve;

    auto* sim = app.add_subcommand("simulate", "Monte-Carlo evaluation of the solved policy");
    add_bundle(sim);
    add_solution(sim);
    sim->add_option("--years", c.years, "Measured years");
    sim->add_option("--seed", c.seed, "Random seed");
    sim->add_option("--warmup", c.warmup, "Discarded warm-up years");
    sim->add_option("--trajectory-years", c.trajectory_years, "Write trajectory.csv for the first N years")
        ->check(CLI::NonNegativeNumber);
    handlers[sim] = cmd_simulate;

    auto* fig = app.add_subcommand("export-figures", "Write the CSV data behind the inflow, value and offer-curve plots");
    add_inflow(fig);
    add_bundle(fig);
    add_solution(fig);
    fig->add_option("--weeks", c.weeks, "Comma-separated weeks for the value and offer-curve files (default all)");
    handlers[fig] = cmd_export_figures;

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        for (auto& [sub, handler] : handlers) {
            if (sub->parsed()) return handler(c);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitValidation;
}
