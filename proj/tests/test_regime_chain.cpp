#include <cmath>
#include <random>

#include "doctest.h"
#include "hydrovalue/error.hpp"
#include "hydrovalue/log.hpp"
#include "hydrovalue/regime_chain.hpp"

using namespace hydrovalue;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct QuietWarnings {
    std::vector<std::string> messages;
    WarningSink previous;
    QuietWarnings() {
        previous = set_warning_sink([this](const std::string& m) { messages.push_back(m); });
    }
    ~QuietWarnings() { set_warning_sink(previous); }
};

// Regime path simulated from a given model; inflow equals the regime index.
RegimeSeries simulate_chain(const TransitionModel& model, int years, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    RegimeSeries rs;
    rs.num_regimes = model.num_regimes;
    int r = 1;
    for (int y = 0; y < years; ++y) {
        for (int w = 1; w <= 52; ++w) {
            const double t = 7.0 * (y * 52 + w - 1);
            rs.entries.push_back({2000 + y, w, t, static_cast<double>(r), r});
            const MatrixXd P = transition_matrix(model, t);
            const double u = U(rng);
            double acc = 0.0;
            int next = model.num_regimes;
            for (int c = 0; c < model.num_regimes; ++c) {
                acc += P(r - 1, c);
                if (u < acc) {
                    next = c + 1;
                    break;
                }
            }
            r = next;
        }
    }
    return rs;
}

QuantileFamily constant_family(const std::vector<double>& cuts) {
    QuantileFamily f;
    f.basis = FourierBasis{kAnnualOmega, 1};
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        QuantileModel m;
        m.alpha = (i + 1.0) / (cuts.size() + 1.0);
        m.basis = f.basis;
        m.beta = VectorXd::Zero(3);
        m.beta[0] = cuts[i];
        f.levels.push_back(m.alpha);
        f.models.push_back(m);
    }
    return f;
}

} // namespace

TEST_CASE("regime assignment follows the interval rule") {
    std::vector<InflowRecord> recs;
    for (double f : {50.0, 100.0, 150.0, 200.0, 900.0}) recs.push_back({2000, static_cast<int>(recs.size()) + 1, 0, f});
    const auto rs = assign_regimes(InflowSeries::from_records(recs), constant_family({100.0, 200.0, 300.0}));
    CHECK(rs.num_regimes == 4);
    CHECK(rs.entries[0].regime == 1);
    CHECK(rs.entries[1].regime == 1); // on the boundary q_1
    CHECK(rs.entries[2].regime == 2);
    CHECK(rs.entries[3].regime == 2);
    CHECK(rs.entries[4].regime == 4);
    const auto n = rs.counts();
    CHECK(n[0] == 2);
    CHECK(n[3] == 1);
}

TEST_CASE("regime shares on 74 synthetic years") {
    SeasonalInflowParams p;
    p.mean_mw = 800.0;
    p.amplitude_mw = 250.0;
    p.noise_sd_mw = 150.0;
    p.noise_ar1 = 0.6;
    const auto s = synthesize_inflow(p, 74, 77);
    const auto fam = fit_quantile_family(s, {0.1, 0.5, 0.9}, FourierBasis{});
    const auto rs = assign_regimes(s, fam);
    const auto n = rs.counts();
    const double total = static_cast<double>(s.size());
    CHECK(std::abs(n[0] / total - 0.1) <= 0.03);
    CHECK(std::abs(n[1] / total - 0.4) <= 0.03);
    CHECK(std::abs(n[2] / total - 0.4) <= 0.03);
    CHECK(std::abs(n[3] / total - 0.1) <= 0.03);
}

TEST_CASE("homogeneous chain is recovered") {
    const FourierBasis basis{kAnnualOmega, 1};
    const auto truth = TransitionModel::homogeneous(MatrixXd{{0.7, 0.3}, {0.4, 0.6}}, basis);
    const auto rs = simulate_chain(truth, 97, 3); // 5043 transitions
    const auto fit = fit_transition_mle(rs, basis);
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(fit.model.gamma(i, 0) - truth.gamma(i, 0)) <= 0.03);
        CHECK(std::abs(fit.model.gamma(i, 1)) <= 0.03);
        CHECK(std::abs(fit.model.gamma(i, 2)) <= 0.03);
    }
    CHECK(fit.log_likelihood >= fit.homogeneous_log_likelihood - 1e-6);
    CHECK(fit.kkt_residual <= 1e-6);
}

TEST_CASE("seasonal cosine coefficient is recovered from 200 years") {
    const FourierBasis basis{kAnnualOmega, 1};
    TransitionModel truth;
    truth.num_regimes = 2;
    truth.basis = basis;
    truth.gamma = MatrixXd{{0.5, 0.3, 0.0}, {0.5, -0.3, 0.0}, {0.4, 0.0, 0.0}, {0.6, 0.0, 0.0}};
    const auto rs = simulate_chain(truth, 200, 5);
    const auto fit = fit_transition_mle(rs, basis);
    CHECK(std::abs(fit.model.gamma(0, 1) - 0.3) <= 0.05);
    CHECK(std::abs(fit.model.gamma(0, 0) - 0.5) <= 0.05);
    CHECK(fit.log_likelihood >= fit.homogeneous_log_likelihood - 1e-6);

    for (int i = 0; i < 365; ++i) {
        const MatrixXd P = transition_matrix(fit.model, static_cast<double>(i));
        CHECK(P.minCoeff() >= 0.0);
        CHECK(P.maxCoeff() <= 1.0);
        for (int r = 0; r < 2; ++r) CHECK(std::abs(P.row(r).sum() - 1.0) <= 1e-9);
    }
    // Coefficient identities behind the row sums.
    for (int r = 0; r < 2; ++r) {
        CHECK(std::abs(fit.model.gamma(2 * r, 0) + fit.model.gamma(2 * r + 1, 0) - 1.0) <= 1e-9);
        CHECK(std::abs(fit.model.gamma(2 * r, 1) + fit.model.gamma(2 * r + 1, 1)) <= 1e-9);
        CHECK(std::abs(fit.model.gamma(2 * r, 2) + fit.model.gamma(2 * r + 1, 2)) <= 1e-9);
    }
}

TEST_CASE("transition matrix identities") {
    const FourierBasis basis{kAnnualOmega, 1};
    const MatrixXd G{{0.2, 0.8}, {0.5, 0.5}};
    const auto m = TransitionModel::homogeneous(G, basis);
    CHECK(transition_matrix(m, 123.0).isApprox(G, 1e-15));
    TransitionModel s = m;
    s.gamma(0, 1) = 0.1;
    s.gamma(1, 1) = -0.1;
    CHECK((transition_matrix(s, 40.0) - transition_matrix(s, 40.0 + 365.25)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("single regime and unvisited regimes") {
    const FourierBasis basis{kAnnualOmega, 1};
    SUBCASE("single regime is trivial") {
        RegimeSeries rs;
        rs.num_regimes = 1;
        for (int w = 1; w <= 10; ++w) rs.entries.push_back({2000, w, 7.0 * (w - 1), 1.0, 1});
        const auto fit = fit_transition_mle(rs, basis);
        CHECK(fit.model.gamma(0, 0) == 1.0);
        CHECK(transition_matrix(fit.model, 55.0)(0, 0) == 1.0);
    }
    SUBCASE("regime without outgoing transitions gets a uniform row") {
        QuietWarnings q;
        RegimeSeries rs;
        rs.num_regimes = 3;
        for (int w = 1; w <= 30; ++w) rs.entries.push_back({2000, w, 7.0 * (w - 1), 1.0, (w % 2) + 1});
        const auto fit = fit_transition_mle(rs, basis);
        CHECK(fit.warnings.size() == 1);
        CHECK(q.messages.size() == 1);
        for (int c = 0; c < 3; ++c) CHECK(fit.model.gamma(6 + c, 0) == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("too short") {
        RegimeSeries rs;
        rs.num_regimes = 2;
        rs.entries.push_back({2000, 1, 0.0, 1.0, 1});
        CHECK_THROWS_AS(fit_transition_mle(rs, basis), ValidationError);
    }
}

TEST_CASE("histogram binning") {
    auto one_regime = [](const std::vector<std::pair<int, double>>& obs) {
        RegimeSeries rs;
        rs.num_regimes = 1;
        for (const auto& [w, f] : obs) rs.entries.push_back({2000, w, 7.0 * (w - 1), f, 1});
        return rs;
    };
    SUBCASE("round half up") {
        QuietWarnings q;
        const auto d = fit_conditional_hist(one_regime({{1, 250.0}}), 100.0, 0);
        const auto& c = d.cell(1, 1);
        REQUIRE(c.support.size() == 1);
        CHECK(c.support[0] == 300.0);
        CHECK(c.probs[0] == 1.0);
    }
    SUBCASE("counting") {
        QuietWarnings q;
        const auto d = fit_conditional_hist(one_regime({{1, 100.0}, {1, 100.0}, {1, 200.0}}), 100.0, 0);
        const auto& c = d.cell(1, 1);
        REQUIRE(c.support.size() == 2);
        CHECK(c.probs[0] == doctest::Approx(2.0 / 3.0));
        CHECK(c.probs[1] == doctest::Approx(1.0 / 3.0));
        CHECK(c.own_count == 3);
    }
    SUBCASE("empty cells widen their window with a warning") {
        QuietWarnings q;
        const auto d = fit_conditional_hist(one_regime({{1, 100.0}, {5, 300.0}}), 100.0, 0);
        CHECK(d.cell(1, 3).window >= 2);
        CHECK(!d.cell(1, 30).support.empty());
        CHECK(!q.messages.empty());
    }
    SUBCASE("circular pooling wraps the year") {
        QuietWarnings q;
        const auto d = fit_conditional_hist(one_regime({{1, 100.0}, {2, 300.0}, {26, 400.0}, {52, 200.0}}), 100.0, 1);
        const auto& c = d.cell(1, 1);
        CHECK(c.support == std::vector<double>{100.0, 200.0, 300.0});
        CHECK(c.own_count == 1);
        CHECK(c.window == 1);
    }
    SUBCASE("unobserved regime is an error") {
        QuietWarnings q;
        RegimeSeries rs = one_regime({{1, 100.0}});
        rs.num_regimes = 2;
        CHECK_THROWS_AS(fit_conditional_hist(rs, 100.0, 1), ValidationError);
    }
}

TEST_CASE("histograms on a synthetic series") {
    QuietWarnings q;
    SeasonalInflowParams p;
    p.mean_mw = 800.0;
    p.amplitude_mw = 250.0;
    p.noise_sd_mw = 150.0;
    p.noise_ar1 = 0.6;
    p.omega = 2.0 * M_PI / 364.0;
    const auto s = synthesize_inflow(p, 74, 9);
    const FourierBasis basis{p.omega, 2};
    const auto fam = fit_quantile_family(s, {0.1, 0.5, 0.9}, basis);
    const auto rs = assign_regimes(s, fam);
    const auto d = fit_conditional_hist(rs, 100.0, 0);
    std::size_t mass = 0;
    const auto grid = enforce_noncrossing(fam, weekly_grid());
    for (int r = 1; r <= 4; ++r) {
        for (int w = 1; w <= 52; ++w) {
            const auto& c = d.cell(r, w);
            double sum = 0.0;
            for (double pr : c.probs) sum += pr;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
            mass += c.own_count;
            if (c.window == 0) {
                const double lo = r == 1 ? 0.0 : grid.values(w - 1, r - 2);
                const double hi = r == 4 ? 1e300 : grid.values(w - 1, r - 1);
                for (double x : c.support) {
                    CHECK(x >= lo - 50.0);
                    CHECK(x <= hi + 50.0);
                }
            }
        }
    }
    CHECK(mass == s.size());
}

TEST_CASE("sampling") {
    ConditionalInflowDist d;
    d.num_regimes = 1;
    d.cells.resize(52);
    d.cell(1, 1) = HistogramCell{{700.0}, {1.0}, {1}, 1, 0};
    d.cell(1, 2) = HistogramCell{{100.0, 200.0}, {0.5, 0.5}, {1, 1}, 2, 0};
    std::mt19937_64 rng(1);
    for (int i = 0; i < 10; ++i) CHECK(sample_inflow(d, 1, 1, rng) == 700.0);
    int low = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) low += sample_inflow(d, 1, 2, rng) == 100.0;
    CHECK(std::abs(static_cast<double>(low) / n - 0.5) <= 0.01);
    std::mt19937_64 a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(sample_inflow(d, 1, 2, a) == sample_inflow(d, 1, 2, b));
    CHECK_THROWS_AS(sample_inflow(d, 1, 3, rng), ValidationError);
}
