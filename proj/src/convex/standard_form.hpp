#pragma once

// Internal: the interior-point and crossover phases work on
//   min c'x  s.t.  A x = b,  0 <= x <= u
// with objective and right-hand side scaled to unit infinity norm.

#include <vector>

#include "hydrovalue/convex/lp.hpp"

namespace hydrovalue::convex::detail {

enum class ColumnKind { shifted_lower, negated_upper, split_free, fixed };

struct ColumnMap {
    ColumnKind kind = ColumnKind::shifted_lower;
    Eigen::Index col = -1;  // first standard column
    Eigen::Index col2 = -1; // negative part of a free variable
    double offset = 0.0;    // bound the column is measured from
};

struct StandardForm {
    SparseMatrix A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    Eigen::VectorXd u; // +inf when unbounded above
    std::vector<ColumnMap> map;
    double c_scale = 1.0;
    double b_scale = 1.0;

    static StandardForm build(const LinearProgram& lp);

    Eigen::Index rows() const { return A.rows(); }
    Eigen::Index cols() const { return A.cols(); }
    bool bounded(Eigen::Index j) const { return u[j] < kInf; }

    /// Maps a scaled standard-form primal point to original variables.
    Eigen::VectorXd to_original(const Eigen::VectorXd& x_std) const;
};

struct CrossoverResult {
    Eigen::VectorXd x;
    bool success = false;
    int moves = 0;
};

/// Moves an (approximately optimal) interior point to a vertex without
/// increasing the objective. `z` and `s` are the multipliers of the lower
/// and upper bounds and `w = u - x`.
CrossoverResult crossover_to_vertex(const StandardForm& sf, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& z, const Eigen::VectorXd& s);

} // namespace hydrovalue::convex::detail
