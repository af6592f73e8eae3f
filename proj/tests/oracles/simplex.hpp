#pragma once

// Dense two-phase tableau simplex with Bland's rule, for
//   min c'x  s.t.  A x = b,  x >= 0.
// Slow and simple; only used to cross-check the interior-point solver.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct SimplexResult {
    enum Status { optimal, infeasible, unbounded } status = infeasible;
    Eigen::VectorXd x;
    double objective = 0.0;
};

inline SimplexResult dense_simplex(const Eigen::MatrixXd& A_in, const Eigen::VectorXd& b_in,
                                   const Eigen::VectorXd& c) {
    const double eps = 1e-10;
    const int m = static_cast<int>(A_in.rows());
    const int n = static_cast<int>(A_in.cols());
    Eigen::MatrixXd A = A_in;
    Eigen::VectorXd b = b_in;
    for (int i = 0; i < m; ++i) {
        if (b[i] < 0) {
            A.row(i) *= -1.0;
            b[i] = -b[i];
        }
    }
    // Tableau columns: n originals, m artificials, rhs.
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
    T.topLeftCorner(m, n) = A;
    T.block(0, n, m, m).setIdentity();
    T.col(n + m).head(m) = b;
    std::vector<int> basis(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

    auto pivot = [&](int row, int col) {
        T.row(row) /= T(row, col);
        for (int i = 0; i <= m; ++i) {
            if (i != row && T(i, col) != 0.0) T.row(i) -= T(i, col) * T.row(row);
        }
        basis[static_cast<std::size_t>(row)] = col;
    };
    auto run = [&](int allowed_cols) -> bool {
        while (true) {
            int enter = -1;
            for (int j = 0; j < allowed_cols; ++j) {
                if (T(m, j) < -eps) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return true;
            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                if (T(i, enter) > eps) {
                    const double ratio = T(i, n + m) / T(i, enter);
                    if (ratio < best - eps ||
                        (std::abs(ratio - best) <= eps && basis[static_cast<std::size_t>(i)] <
                                                               basis[static_cast<std::size_t>(leave)])) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
    };

    SimplexResult res;
    // Phase 1: minimize the sum of artificials.
    T.row(m).setZero();
    for (int i = 0; i < m; ++i) T.row(m) -= T.row(i);
    for (int i = 0; i < m; ++i) T(m, n + i) = 0.0;
    run(n + m);
    if (-T(m, n + m) > 1e-7 * (1.0 + b.cwiseAbs().maxCoeff())) return res;
    // Drive remaining artificials out of the basis.
    for (int i = 0; i < m; ++i) {
        if (basis[static_cast<std::size_t>(i)] >= n) {
            for (int j = 0; j < n; ++j) {
                if (std::abs(T(i, j)) > 1e-9) {
                    pivot(i, j);
                    break;
                }
            }
        }
    }
    // Phase 2.
    T.row(m).setZero();
    T.row(m).head(n) = c.transpose();
    for (int i = 0; i < m; ++i) {
        const int bj = basis[static_cast<std::size_t>(i)];
        if (bj < n && c[bj] != 0.0) T.row(m) -= c[bj] * T.row(i);
    }
    for (int i = 0; i < m; ++i) T(i, n + i) = T(i, n + i); // artificials excluded below
    if (!run(n)) {
        res.status = SimplexResult::unbounded;
        return res;
    }
    res.status = SimplexResult::optimal;
    res.x = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i) {
        const int bj = basis[static_cast<std::size_t>(i)];
        if (bj < n) res.x[bj] = T(i, n + m);
    }
    res.objective = c.dot(res.x);
    return res;
}

} // namespace oracle
