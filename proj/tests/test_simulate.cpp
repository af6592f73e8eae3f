#include "doctest.h"
#include "hydrovalue/error.hpp"
#include "hydrovalue/policy_pricing.hpp"
#include "hydrovalue/simulate.hpp"
#include "support/toy.hpp"

using namespace hydrovalue;
using Eigen::MatrixXd;

TEST_CASE("deterministic toy: simulated cost equals the LP gain") {
    // Wet first half of the year, dry second half, one regime.
    const auto b = toy::bundle(MatrixXd::Ones(1, 1), [](int, int w) { return w <= 26 ? 400.0 : 100.0; });
    auto cfg = toy::small_config();
    cfg.storage_blocks = 8;
    const auto m = build_model(cfg, b);
    const auto ps = solve_primal(m);
    REQUIRE(ps.basic);
    SimulationOptions opt;
    opt.years = 40;
    const auto sim = simulate_policy(m, b, ps.action, opt);
    CHECK(sim.mean_weekly_cost == doctest::Approx(ps.u).epsilon(1e-12));
    CHECK(sim.standard_error == doctest::Approx(0.0).scale(1.0));
    CHECK(sim.fallback_weeks == 0);
}

TEST_CASE("stochastic toy: law of large numbers against the LP gain") {
    const MatrixXd chain{{0.8, 0.2}, {0.3, 0.7}};
    auto b = toy::two_point_bundle(chain, 100.0, 400.0, 0.5);
    for (int w = 1; w <= 52; ++w) {
        b.histogram.cell(1, w).support = {0.0, 200.0};
        b.histogram.cell(2, w).support = {300.0, 500.0};
    }
    const auto m = build_model(toy::small_config(), b);
    const auto ps = solve_primal(m);
    SimulationOptions opt;
    opt.years = 10000;
    const auto sim = simulate_policy(m, b, ps.action, opt, &ps.mass);
    CHECK(std::abs(sim.mean_weekly_cost - ps.u) <= 3.0 * sim.standard_error);
    CHECK(sim.standard_error > 0.0);
    CHECK(sim.occupancy_tv >= 0.0);
    CHECK(sim.occupancy_tv <= 0.05);
    CHECK(sim.year_cost.size() == 10000);
    for (const auto& ls : sim.levels) {
        CHECK(ls.min <= ls.mean);
        CHECK(ls.mean <= ls.max);
    }
}

TEST_CASE("same seed reproduces, different seed differs") {
    const auto b = toy::two_point_bundle(MatrixXd{{0.6, 0.4}, {0.4, 0.6}}, 100.0, 300.0, 0.4);
    const auto m = build_model(toy::small_config(), b);
    const auto ps = solve_primal(m);
    SimulationOptions opt;
    opt.years = 200;
    const auto a = simulate_policy(m, b, ps.action, opt);
    const auto c = simulate_policy(m, b, ps.action, opt);
    CHECK(a.year_cost == c.year_cost);
    opt.seed += 1;
    const auto d = simulate_policy(m, b, ps.action, opt);
    CHECK(a.year_cost != d.year_cost);
}

TEST_CASE("overrides") {
    const auto b = toy::two_point_bundle(MatrixXd{{0.6, 0.4}, {0.4, 0.6}}, 100.0, 300.0, 0.4);
    const auto cfg = toy::small_config();
    const auto m = build_model(cfg, b);
    const auto ps = solve_primal(m);
    SimulationOptions opt;
    opt.years = 50;
    const auto plain = simulate_policy(m, b, ps.action, opt);

    opt.overrides.demand_mw.assign(52, cfg.demand_mw);
    CHECK(simulate_policy(m, b, ps.action, opt).year_cost == plain.year_cost);

    opt.overrides.demand_mw.assign(50 * 52, cfg.demand_mw + 100.0);
    CHECK(simulate_policy(m, b, ps.action, opt).mean_weekly_cost > plain.mean_weekly_cost);

    opt.overrides.demand_mw.assign(51, cfg.demand_mw);
    CHECK_THROWS_AS(simulate_policy(m, b, ps.action, opt), ValidationError);

    opt.overrides.demand_mw.clear();
    opt.overrides.fuel_price.assign(52, 0.0);
    CHECK(simulate_policy(m, b, ps.action, opt).mean_weekly_cost < plain.mean_weekly_cost);
}

TEST_CASE("unsupported states borrow the nearest supported level's action") {
    const auto b = toy::bundle(MatrixXd::Ones(1, 1), [](int, int) { return 200.0; });
    const auto m = build_model(toy::small_config(), b);
    std::vector<int> action(static_cast<std::size_t>(m.num_states), kUnsupported);
    // Only level 0 supported, releasing 2 blocks: the whole path uses 2.
    for (int w = 1; w <= 52; ++w) action[static_cast<std::size_t>(m.index.flat({0, 1, w}))] = 2;
    SimulationOptions opt;
    opt.years = 3;
    opt.warmup_years = 0;
    const auto sim = simulate_policy(m, b, action, opt);
    // Level starts at 2 and stays there: inflow 2 blocks, release 2 blocks.
    CHECK(sim.fallback_weeks == 3 * 52);
    CHECK(sim.levels[0].min == 2);
    CHECK(sim.levels[51].max == 2);
    CHECK(sim.curtailment_weeks == 0);

    std::fill(action.begin(), action.end(), kUnsupported);
    const auto idle = simulate_policy(m, b, action, opt);
    CHECK(idle.levels[51].max == 4);
    CHECK(idle.spill_weeks > 0);
}

TEST_CASE("parameter validation") {
    const auto b = toy::bundle(MatrixXd::Ones(1, 1), [](int, int) { return 200.0; });
    const auto m = build_model(toy::small_config(), b);
    std::vector<int> action(static_cast<std::size_t>(m.num_states), 0);
    SimulationOptions opt;
    opt.years = 0;
    CHECK_THROWS_AS(simulate_policy(m, b, action, opt), ValidationError);
    opt.years = 1;
    action.pop_back();
    CHECK_THROWS_AS(simulate_policy(m, b, action, opt), ValidationError);
}
