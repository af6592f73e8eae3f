#include <filesystem>
#include <map>

#include "doctest.h"
#include "hydrovalue/error.hpp"
#include "hydrovalue/mdp.hpp"
#include "support/toy.hpp"

using namespace hydrovalue;
using Eigen::MatrixXd;

TEST_CASE("weekly cost at the case-study prices") {
    const SystemConfig c;
    CHECK(weekly_cost(c, 1400.0) == 0.0);
    CHECK(weekly_cost(c, 0.0) == doctest::Approx(91'560'000.0));
    CHECK(weekly_cost(c, 500.0) == doctest::Approx(7'560'000.0));
    CHECK(weekly_cost(c, 2000.0) == 0.0);
    CHECK(weekly_cost(c, 1000.0) == doctest::Approx(400.0 * 50.0 * 168.0));
}

TEST_CASE("run of river is capped by inflow and capacity") {
    const SystemConfig c;
    CHECK(run_of_river(c, 300.0) == 300.0);
    CHECK(run_of_river(c, 800.0) == 500.0);
}

TEST_CASE("reservoir step") {
    const SystemConfig c;
    SUBCASE("no clamping") {
        const auto o = reservoir_step(c, 10, 2, 300.0);
        CHECK(o.next_level == 11);
        CHECK(o.release_blocks == 2);
        CHECK(o.spill_blocks == 0);
        CHECK(o.hydro_mw == 500.0);
    }
    SUBCASE("spill at capacity") {
        const auto o = reservoir_step(c, c.storage_blocks, 0, 500.0);
        CHECK(o.next_level == c.storage_blocks);
        CHECK(o.spill_blocks == 5);
    }
    SUBCASE("release capped at available water") {
        const auto o = reservoir_step(c, 0, 9, 100.0);
        CHECK(o.release_blocks == 1);
        CHECK(o.next_level == 0);
        CHECK(o.hydro_mw == 200.0);
        CHECK(o.curtailed);
    }
}

TEST_CASE("case-study dimensions") {
    const SystemConfig c;
    const auto d = model_dimensions(c, 4);
    CHECK(d.states == 10608);
    CHECK(d.actions == 10);
    CHECK(d.variables == 106080);
    CHECK(d.equality_rows == 10609);
}

TEST_CASE("state index is a bijection") {
    const StateIndex idx{51, 4};
    for (int i = 0; i < idx.size(); ++i) CHECK(idx.flat(idx.state(i)) == i);
    CHECK(idx.flat({0, 1, 1}) == 0);
    CHECK(idx.flat({50, 4, 52}) == 10607);
}

TEST_CASE("kernel of a toy reservoir") {
    const MatrixXd chain{{0.7, 0.3}, {0.4, 0.6}};
    const auto b = toy::two_point_bundle(chain, 100.0, 300.0, 0.25);
    const auto cfg = toy::small_config();
    const auto m = build_model(cfg, b);
    REQUIRE_NOTHROW(m.validate());
    CHECK(m.num_states == 5 * 2 * 52);
    CHECK(m.num_actions == 4);

    SUBCASE("probabilities are products of inflow and regime terms") {
        // l = 1, a = 1: f = 1 block -> l' = 1, f = 3 blocks -> l' = 3.
        const int s = m.index.flat({1, 1, 10});
        const auto k = static_cast<std::size_t>(m.pair(s, 1));
        std::map<int, double> p;
        for (auto e = m.row_start[k]; e < m.row_start[k + 1]; ++e) p[m.next_state[e]] = m.probability[e];
        CHECK(p.size() == 4);
        CHECK(p[m.index.flat({1, 1, 11})] == doctest::Approx(0.25 * 0.7));
        CHECK(p[m.index.flat({1, 2, 11})] == doctest::Approx(0.25 * 0.3));
        CHECK(p[m.index.flat({3, 1, 11})] == doctest::Approx(0.75 * 0.7));
        CHECK(p[m.index.flat({3, 2, 11})] == doctest::Approx(0.75 * 0.3));
    }
    SUBCASE("duplicate successors merge") {
        // At capacity both inflows spill to the same level.
        const int s = m.index.flat({cfg.storage_blocks, 2, 52});
        const auto k = static_cast<std::size_t>(m.pair(s, 0));
        CHECK(m.row_start[k + 1] - m.row_start[k] == 2);
        CHECK(m.next_state[m.row_start[k]] == m.index.flat({cfg.storage_blocks, 1, 1}));
        CHECK(m.probability[m.row_start[k]] == doctest::Approx(0.4));
    }
    SUBCASE("cost is the expectation over inflow") {
        const int s = m.index.flat({0, 1, 5});
        const double expect = 0.25 * weekly_cost(cfg, 100.0 + 100.0) + 0.75 * weekly_cost(cfg, 100.0 + 300.0);
        CHECK(m.cost[m.pair(s, 3)] == doctest::Approx(expect));
    }
    SUBCASE("kernel is 52-partite by week and successors are sorted") {
        for (int s = 0; s < m.num_states; ++s) {
            const int w = m.index.state(s).week;
            for (int a = 0; a < m.num_actions; ++a) {
                const auto k = static_cast<std::size_t>(m.pair(s, a));
                for (auto e = m.row_start[k]; e < m.row_start[k + 1]; ++e) {
                    CHECK(m.index.state(m.next_state[e]).week == w % 52 + 1);
                    if (e > m.row_start[k]) CHECK(m.next_state[e] > m.next_state[e - 1]);
                }
            }
        }
    }
    SUBCASE("water accounting") {
        for (int l = 0; l <= cfg.storage_blocks; ++l) {
            for (int a = 0; a <= cfg.turbine_blocks; ++a) {
                for (double f : {100.0, 300.0}) {
                    const auto o = reservoir_step(cfg, l, a, f);
                    const int fb = static_cast<int>(f / cfg.block_mw);
                    CHECK(o.next_level - l == fb - o.release_blocks - o.spill_blocks);
                    CHECK(o.spill_blocks >= 0);
                    if (o.spill_blocks > 0) CHECK(o.next_level == cfg.storage_blocks);
                    CHECK(o.release_blocks <= std::min(a, l + fb));
                }
            }
        }
    }
}

TEST_CASE("build rejects a bin width that differs from the block size") {
    const auto b = toy::bundle(MatrixXd::Ones(1, 1), [](int, int) { return 100.0; }, 50.0);
    CHECK_THROWS_AS(build_model(toy::small_config(), b), ValidationError);
}

TEST_CASE("config validation") {
    SystemConfig c;
    CHECK_NOTHROW(c.validate());
    c.curtailment_price = 10.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = SystemConfig{};
    c.storage_blocks = -1;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("model dump round trip") {
    const auto b = toy::two_point_bundle(MatrixXd{{0.5, 0.5}, {0.2, 0.8}}, 100.0, 200.0, 0.5);
    const auto m = build_model(toy::small_config(), b);
    const auto path = std::filesystem::temp_directory_path() / "hv_model.bin";
    write_model(path, m);
    const auto r = read_model(path);
    CHECK(r.num_states == m.num_states);
    CHECK(r.num_actions == m.num_actions);
    CHECK(r.row_start == m.row_start);
    CHECK(r.next_state == m.next_state);
    CHECK(r.probability == m.probability);
    CHECK(r.cost == m.cost);
    CHECK(r.config_hash == m.config_hash);
    REQUIRE(r.config.has_value());
    CHECK(r.config->storage_blocks == m.config->storage_blocks);
    CHECK(r.index.num_regimes == 2);
    std::filesystem::remove(path);
}

TEST_CASE("validate catches a broken kernel") {
    const auto b = toy::bundle(MatrixXd::Ones(1, 1), [](int, int) { return 100.0; });
    auto m = build_model(toy::small_config(), b);
    m.probability[0] += 1e-6;
    CHECK_THROWS_AS(m.validate(), ValidationError);
}
