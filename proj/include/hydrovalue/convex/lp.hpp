#pragma once

#include <limits>
#include <ostream>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace hydrovalue::convex {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// minimize c'x  subject to  A x = b,  lower <= x <= upper.
///
/// Empty `lower` means all zero; empty `upper` means all +inf. Bounds may be
/// infinite in either direction (free variables are allowed).
struct LinearProgram {
    Eigen::VectorXd c;
    SparseMatrix A;
    Eigen::VectorXd b;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    Eigen::Index num_vars() const { return A.cols(); }
    Eigen::Index num_rows() const { return A.rows(); }
    double lower_bound(Eigen::Index j) const { return lower.size() ? lower[j] : 0.0; }
    double upper_bound(Eigen::Index j) const { return upper.size() ? upper[j] : kInf; }

    /// Throws ValidationError on inconsistent dimensions, non-finite data or
    /// crossed bounds.
    void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

std::string to_string(LpStatus status);

struct LpOptions {
    /// Relative tolerance on primal/dual residuals and the duality gap.
    double tolerance = 1e-9;
    int max_iterations = 200;
    /// Crossover to a vertex after the interior-point phase.
    bool basic_solution = false;
    /// Initial diagonal regularization of the (scaled) normal equations;
    /// raised automatically if a factorization breaks down.
    double dual_regularization = 0.0;
    bool verbose = false;
};

struct LpSolution {
    LpStatus status = LpStatus::iteration_limit;
    Eigen::VectorXd x;
    /// Multipliers of the equality rows.
    Eigen::VectorXd duals;
    /// c - A' duals.
    Eigen::VectorXd reduced_costs;
    double objective = 0.0;
    double dual_objective = 0.0;
    int iterations = 0;

    // Unscaled residuals of the returned point.
    double primal_residual = 0.0; // ||A x - b||_inf
    double dual_residual = 0.0;   // dual infeasibility, inf-norm
    double relative_gap = 0.0;    // |obj - dual_obj| / (1 + |obj|)

    /// True when `x` is a vertex produced by the crossover step.
    bool basic = false;
    int crossover_moves = 0;

    /// Farkas-type direction when infeasibility or unboundedness is detected.
    Eigen::VectorXd ray;
};

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {});

/// Dumps the LP in free MPS format for cross-checking with external solvers.
void write_mps(std::ostream& out, const LinearProgram& lp, const std::string& name = "LP");

} // namespace hydrovalue::convex
