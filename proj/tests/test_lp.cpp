#include <random>
#include <sstream>

#include "doctest.h"
#include "hydrovalue/convex/lp.hpp"
#include "hydrovalue/error.hpp"
#include "oracles/simplex.hpp"

using namespace hydrovalue;
using namespace hydrovalue::convex;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SparseMatrix sparse(const MatrixXd& d) { return d.sparseView(); }

LinearProgram dense_lp(const MatrixXd& A, const VectorXd& b, const VectorXd& c) {
    LinearProgram lp;
    lp.A = sparse(A);
    lp.b = b;
    lp.c = c;
    return lp;
}

// Random feasible, bounded LP: b = A x0 with x0 >= 0, c = A'y + z with z >= 0.
LinearProgram random_lp(int m, int n, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_real_distribution<double> P(0.0, 1.0);
    MatrixXd A = MatrixXd::Zero(m, n);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            if (P(rng) < density) A(i, j) = U(rng);
        }
        A(i, i % n) += 1.0;
    }
    VectorXd x0(n);
    for (int j = 0; j < n; ++j) x0[j] = P(rng) < 0.5 ? 0.0 : P(rng);
    VectorXd y(m);
    for (int i = 0; i < m; ++i) y[i] = U(rng);
    VectorXd z(n);
    for (int j = 0; j < n; ++j) z[j] = P(rng) < 0.4 ? 0.0 : P(rng);
    return dense_lp(A, A * x0, A.transpose() * y + z);
}

} // namespace

TEST_CASE("single variable equality") {
    LinearProgram lp = dense_lp(MatrixXd::Ones(1, 1), VectorXd::Ones(1), VectorXd::Ones(1));
    const auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.duals[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("symmetric simplex has zero duality gap and a vertex on request") {
    LinearProgram lp = dense_lp(MatrixXd::Ones(1, 2), VectorXd::Ones(1), -VectorXd::Ones(2));
    LpOptions opt;
    opt.basic_solution = true;
    const auto sol = solve_lp(lp, opt);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.objective == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(std::abs(sol.objective - sol.dual_objective) <= 1e-8);
    CHECK(sol.basic);
    // Lowest index kept among the tied columns.
    CHECK(sol.x[0] == doctest::Approx(1.0));
    CHECK(sol.x[1] == doctest::Approx(0.0));
}

TEST_CASE("random LPs match the dense simplex oracle") {
    std::mt19937_64 rng(12345);
    for (int trial = 0; trial < 10; ++trial) {
        const LinearProgram lp = random_lp(50, 120, 0.15, rng);
        const auto ref = oracle::dense_simplex(MatrixXd(lp.A), lp.b, lp.c);
        REQUIRE(ref.status == oracle::SimplexResult::optimal);
        LpOptions opt;
        opt.basic_solution = (trial % 2 == 0);
        const auto sol = solve_lp(lp, opt);
        REQUIRE(sol.status == LpStatus::optimal);
        CHECK(std::abs(sol.objective - ref.objective) <= 1e-6 * (1.0 + std::abs(ref.objective)));
        CHECK(std::abs(sol.objective - lp.b.dot(sol.duals)) <= 1e-6 * (1.0 + std::abs(sol.objective)));
        CHECK(sol.primal_residual <= 1e-8 * (1.0 + lp.b.cwiseAbs().maxCoeff()));
        CHECK(sol.x.minCoeff() >= -1e-12);
        CHECK((lp.c - MatrixXd(lp.A).transpose() * sol.duals).minCoeff() >= -1e-7);
        if (opt.basic_solution) {
            CHECK(sol.basic);
            int positive = 0;
            for (Eigen::Index j = 0; j < sol.x.size(); ++j) positive += sol.x[j] > 1e-9;
            CHECK(positive <= 50);
        }
    }
}

TEST_CASE("box bounds and shifted lower bounds") {
    // min -x0 - 2 x1 + x2  s.t. x0 + x1 + x2 = 2, 0 <= x0 <= 1, 0 <= x1 <= 0.5, x2 >= -3
    LinearProgram lp = dense_lp(MatrixXd::Ones(1, 3), VectorXd::Constant(1, 2.0), VectorXd{{-1.0, -2.0, 1.0}});
    lp.lower = VectorXd{{0.0, 0.0, -3.0}};
    lp.upper = VectorXd{{1.0, 0.5, kInf}};
    LpOptions opt;
    opt.basic_solution = true;
    const auto sol = solve_lp(lp, opt);
    REQUIRE(sol.status == LpStatus::optimal);
    // x2 = 2 - x0 - x1 >= -3 ; cost = -x0 - 2x1 + (2 - x0 - x1) = 2 - 2x0 - 3x1 -> x0 = 1, x1 = 0.5
    CHECK(sol.x[0] == doctest::Approx(1.0));
    CHECK(sol.x[1] == doctest::Approx(0.5));
    CHECK(sol.x[2] == doctest::Approx(0.5));
    CHECK(sol.objective == doctest::Approx(-1.5));
    CHECK(sol.dual_objective == doctest::Approx(-1.5).epsilon(1e-8));
}

TEST_CASE("free variable in a two-sided system") {
    // min x0 s.t. x0 - x1 = -2, x0 free, 0 <= x1 <= 1 -> x0 = -2
    LinearProgram lp = dense_lp(MatrixXd{{1.0, -1.0}}, VectorXd::Constant(1, -2.0), VectorXd{{1.0, 0.0}});
    lp.lower = VectorXd{{-kInf, 0.0}};
    lp.upper = VectorXd{{kInf, 1.0}};
    LpOptions opt;
    opt.basic_solution = true;
    const auto sol = solve_lp(lp, opt);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.x[0] == doctest::Approx(-2.0));
    CHECK(sol.x[1] == doctest::Approx(0.0));
}

TEST_CASE("negative lower bounds and upper-only variables") {
    // min x0 + x1 s.t. x0 - x1 = 1, -2 <= x0, x1 <= 4
    LinearProgram lp = dense_lp(MatrixXd{{1.0, -1.0}}, VectorXd::Ones(1), VectorXd::Ones(2));
    lp.lower = VectorXd{{-2.0, -kInf}};
    lp.upper = VectorXd{{kInf, 4.0}};
    const auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.x[0] == doctest::Approx(-2.0).epsilon(1e-7));
    CHECK(sol.x[1] == doctest::Approx(-3.0).epsilon(1e-7));
    CHECK(sol.objective == doctest::Approx(-5.0).epsilon(1e-8));
}

TEST_CASE("dependent equality rows get zero duals and a consistent solution") {
    MatrixXd A{{1.0, 1.0, 0.0}, {0.0, 1.0, 1.0}, {1.0, 2.0, 1.0}};
    LinearProgram lp = dense_lp(A, VectorXd{{1.0, 1.0, 2.0}}, VectorXd{{1.0, 2.0, 3.0}});
    LpOptions opt;
    opt.basic_solution = true;
    const auto sol = solve_lp(lp, opt);
    REQUIRE(sol.status == LpStatus::optimal);
    const auto ref = oracle::dense_simplex(A, lp.b, lp.c);
    CHECK(sol.objective == doctest::Approx(ref.objective).epsilon(1e-8));
    CHECK(sol.primal_residual <= 1e-9);
    CHECK(std::abs(sol.objective - lp.b.dot(sol.duals)) <= 1e-8);
}

TEST_CASE("infeasible and unbounded problems are reported") {
    SUBCASE("infeasible") {
        // x0 + x1 = -1 with x >= 0
        LinearProgram lp = dense_lp(MatrixXd::Ones(1, 2), VectorXd::Constant(1, -1.0), VectorXd::Ones(2));
        CHECK(solve_lp(lp).status == LpStatus::infeasible);
    }
    SUBCASE("unbounded") {
        // min -x0 s.t. x0 - x1 = 0
        LinearProgram lp = dense_lp(MatrixXd{{1.0, -1.0}}, VectorXd::Zero(1), VectorXd{{-1.0, 0.0}});
        CHECK(solve_lp(lp).status == LpStatus::unbounded);
    }
}

TEST_CASE("validation rejects inconsistent data") {
    LinearProgram lp = dense_lp(MatrixXd::Ones(1, 2), VectorXd::Ones(1), VectorXd::Ones(3));
    CHECK_THROWS_AS(solve_lp(lp), ValidationError);
    lp.c = VectorXd::Ones(2);
    lp.lower = VectorXd{{1.0, 0.0}};
    lp.upper = VectorXd{{0.0, 1.0}};
    CHECK_THROWS_AS(solve_lp(lp), ValidationError);
}

TEST_CASE("deterministic across repeated solves") {
    std::mt19937_64 rng(7);
    const LinearProgram lp = random_lp(30, 70, 0.2, rng);
    LpOptions opt;
    opt.basic_solution = true;
    const auto a = solve_lp(lp, opt);
    const auto b = solve_lp(lp, opt);
    CHECK(a.x == b.x);
    CHECK(a.duals == b.duals);
}

TEST_CASE("MPS dump names every section") {
    LinearProgram lp = dense_lp(MatrixXd{{1.0, 2.0}}, VectorXd::Ones(1), VectorXd::Ones(2));
    lp.upper = VectorXd{{3.0, kInf}};
    std::ostringstream os;
    write_mps(os, lp, "toy");
    const std::string s = os.str();
    CHECK(s.find("NAME toy") != std::string::npos);
    CHECK(s.find("ROWS") != std::string::npos);
    CHECK(s.find("COLUMNS") != std::string::npos);
    CHECK(s.find("RHS") != std::string::npos);
    CHECK(s.find("BOUNDS") != std::string::npos);
    CHECK(s.find("ENDATA") != std::string::npos);
}
