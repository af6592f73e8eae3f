#include "hydrovalue/simulate.hpp"

#include <cmath>
#include <random>

#include "hydrovalue/error.hpp"
#include "hydrovalue/policy_pricing.hpp"
#include "hydrovalue/regime_chain.hpp"

namespace hydrovalue {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 year_stream(std::uint64_t seed, std::int64_t year) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(year)));
}

void check_override(const std::vector<double>& v, int years, const char* what) {
    if (v.empty()) return;
    if (v.size() != static_cast<std::size_t>(kWeeksPerYear) &&
        v.size() != static_cast<std::size_t>(years) * kWeeksPerYear) {
        throw ValidationError(std::string("simulation override '") + what + "' must have 52 or years*52 entries");
    }
    for (double x : v) {
        if (!std::isfinite(x) || x < 0.0) throw ValidationError(std::string("simulation override '") + what + "' has invalid entries");
    }
}

double override_at(const std::vector<double>& v, std::int64_t measured_week, int week, double fallback) {
    if (v.empty() || measured_week < 0) return fallback;
    if (v.size() == static_cast<std::size_t>(kWeeksPerYear)) return v[static_cast<std::size_t>(week - 1)];
    return v[static_cast<std::size_t>(measured_week)];
}

// Action per state with the unsupported-state fallback already applied.
std::vector<int> filled_policy(const MdpModel& m, const std::vector<int>& action, std::vector<char>& borrowed) {
    const int L = m.index.num_levels;
    std::vector<int> out(action.size(), 0);
    borrowed.assign(action.size(), 0);
    for (int s = 0; s < m.num_states; ++s) {
        if (action[static_cast<std::size_t>(s)] != kUnsupported) {
            out[static_cast<std::size_t>(s)] = action[static_cast<std::size_t>(s)];
            continue;
        }
        borrowed[static_cast<std::size_t>(s)] = 1;
        const int base = s - s % L;
        const int level = s % L;
        for (int d = 1; d < L; ++d) {
            const int lo = level - d;
            const int hi = level + d;
            if (lo >= 0 && action[static_cast<std::size_t>(base + lo)] != kUnsupported) {
                out[static_cast<std::size_t>(s)] = action[static_cast<std::size_t>(base + lo)];
                break;
            }
            if (hi < L && action[static_cast<std::size_t>(base + hi)] != kUnsupported) {
                out[static_cast<std::size_t>(s)] = action[static_cast<std::size_t>(base + hi)];
                break;
            }
        }
    }
    return out;
}

} // namespace

SimulationResult simulate_policy(const MdpModel& m, const InflowBundle& bundle, const std::vector<int>& action,
                                 const SimulationOptions& opt, const std::vector<double>* reference) {
    if (!m.config) throw ValidationError("simulation needs a reservoir model");
    if (opt.years < 1) throw ValidationError("simulation years must be positive");
    if (opt.trajectory_years < 0) throw ValidationError("trajectory years must be non-negative");
    if (opt.warmup_years < 0) throw ValidationError("warm-up years must be non-negative");
    if (static_cast<int>(action.size()) != m.num_states) throw ValidationError("policy size does not match the model");
    if (reference && static_cast<int>(reference->size()) != m.num_states) {
        throw ValidationError("reference occupancy size does not match the model");
    }
    const int R = bundle.num_regimes();
    if (R != m.index.num_regimes) throw ValidationError("bundle and model disagree on the number of regimes");
    check_override(opt.overrides.demand_mw, opt.years, "demand");
    check_override(opt.overrides.fuel_price, opt.years, "fuel");

    const SystemConfig& base = *m.config;
    std::vector<char> borrowed;
    const std::vector<int> policy = filled_policy(m, action, borrowed);

    // Cumulative regime transition rows per week.
    std::vector<double> cum(static_cast<std::size_t>(kWeeksPerYear * R * R));
    for (int w = 1; w <= kWeeksPerYear; ++w) {
        const Eigen::MatrixXd P = transition_matrix(bundle.transitions, 7.0 * (w - 1));
        for (int r = 0; r < R; ++r) {
            double acc = 0.0;
            for (int c = 0; c < R; ++c) {
                acc += P(r, c);
                cum[static_cast<std::size_t>(((w - 1) * R + r) * R + c)] = acc;
            }
        }
    }

    SimulationResult res;
    res.years = opt.years;
    res.year_cost.assign(static_cast<std::size_t>(opt.years), 0.0);
    std::vector<double> level_sum(kWeeksPerYear, 0.0);
    for (auto& ls : res.levels) {
        ls.min = base.storage_blocks;
        ls.max = 0;
    }
    std::vector<std::int64_t> visits;
    if (reference) visits.assign(static_cast<std::size_t>(m.num_states), 0);

    int level = base.storage_blocks / 2;
    int regime = (R + 1) / 2;
    SystemConfig cfg = base;
    for (int y = -opt.warmup_years; y < opt.years; ++y) {
        auto rng = year_stream(opt.seed, y);
        const bool measured = y >= 0;
        double year_total = 0.0;
        for (int w = 1; w <= kWeeksPerYear; ++w) {
            const int s = m.index.flat({level, regime, w});
            const std::int64_t mw = measured ? static_cast<std::int64_t>(y) * kWeeksPerYear + (w - 1) : -1;
            cfg.demand_mw = override_at(opt.overrides.demand_mw, mw, w, base.demand_mw);
            cfg.fuel_price = override_at(opt.overrides.fuel_price, mw, w, base.fuel_price);

            const double f = sample_inflow(bundle.histogram, regime, w, rng);
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            const double* row = &cum[static_cast<std::size_t>(((w - 1) * R + regime - 1) * R)];
            int next_regime = R;
            for (int c = 0; c < R - 1; ++c) {
                if (u < row[c]) {
                    next_regime = c + 1;
                    break;
                }
            }
            const StepOutcome o = reservoir_step(cfg, level, policy[static_cast<std::size_t>(s)], f);

            if (measured) {
                year_total += o.cost;
                res.curtailment_weeks += o.curtailed ? 1 : 0;
                res.spill_weeks += o.spill_blocks > 0 ? 1 : 0;
                res.fallback_weeks += borrowed[static_cast<std::size_t>(s)];
                auto& ls = res.levels[static_cast<std::size_t>(w - 1)];
                level_sum[static_cast<std::size_t>(w - 1)] += level;
                ls.min = std::min(ls.min, level);
                ls.max = std::max(ls.max, level);
                if (reference) ++visits[static_cast<std::size_t>(s)];
                if (y < opt.trajectory_years) {
                    res.trajectory.push_back({y, w, regime, level, f, o.release_blocks, o.spill_blocks, o.cost});
                }
            }
            level = o.next_level;
            regime = next_regime;
        }
        if (measured) res.year_cost[static_cast<std::size_t>(y)] = year_total;
    }

    double sum = 0.0;
    for (double c : res.year_cost) sum += c;
    const double n = opt.years;
    res.mean_annual_cost = sum / n;
    res.mean_weekly_cost = res.mean_annual_cost / kWeeksPerYear;
    if (opt.years > 1) {
        double ss = 0.0;
        for (double c : res.year_cost) {
            const double d = c / kWeeksPerYear - res.mean_weekly_cost;
            ss += d * d;
        }
        res.standard_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    for (int w = 0; w < kWeeksPerYear; ++w) res.levels[static_cast<std::size_t>(w)].mean = level_sum[static_cast<std::size_t>(w)] / n;

    if (reference) {
        const double steps = n * kWeeksPerYear;
        double tv = 0.0;
        for (int s = 0; s < m.num_states; ++s) {
            tv += std::abs(static_cast<double>(visits[static_cast<std::size_t>(s)]) / steps - (*reference)[static_cast<std::size_t>(s)]);
        }
        res.occupancy_tv = 0.5 * tv;
    }
    return res;
}

} // namespace hydrovalue
