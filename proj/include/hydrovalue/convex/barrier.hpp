#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hydrovalue/error.hpp"

namespace hydrovalue::convex {

/// weight * log(a' x + offset), with `a` given sparsely as (index, value).
struct LogTerm {
    std::vector<std::pair<int, double>> a;
    double offset = 0.0;
    double weight = 1.0;
};

/// Second-order cone constraint ||P x|| <= q' x + d.
struct ConeConstraint {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    double d = 0.0;
};

/// maximize sum_i weight_i log(a_i' x + offset_i)
/// subject to E x = e and the cone constraints.
struct BarrierProblem {
    int dim = 0;
    std::vector<LogTerm> terms;
    Eigen::MatrixXd E; // may have zero rows
    Eigen::VectorXd e;
    std::vector<ConeConstraint> cones;

    double log_likelihood(const Eigen::VectorXd& x) const;
};

struct BarrierOptions {
    double mu_initial = 1.0;
    double mu_factor = 0.1;
    /// Outer loop stops once the barrier gap bound (cone count * 2 * mu) falls
    /// below this fraction of max(1, |objective|).
    double gap_tolerance = 1e-11;
    double kkt_tolerance = 1e-6;
    int max_newton_per_stage = 200;
    int max_outer = 40;
};

struct BarrierResult {
    Eigen::VectorXd x;
    double objective = 0.0;    // sum of weighted logs at x
    double kkt_residual = 0.0; // ||Z' grad||_2 / (1 + sum of weights) at the last stage
    double mu = 0.0;
    int outer_iterations = 0;
    int newton_iterations = 0;
};

class BarrierError : public SolverError {
public:
    BarrierError(const std::string& what, Eigen::VectorXd last_iterate, double kkt_residual)
        : SolverError(what), last_iterate_(std::move(last_iterate)), kkt_residual_(kkt_residual) {}

    const Eigen::VectorXd& last_iterate() const { return last_iterate_; }
    double kkt_residual() const { return kkt_residual_; }

private:
    Eigen::VectorXd last_iterate_;
    double kkt_residual_;
};

/// Log-barrier method with damped Newton steps in the null space of E.
/// `start` must satisfy every cone and log term strictly; it is projected
/// onto E x = e before the first step.
BarrierResult solve_log_barrier_mle(const BarrierProblem& problem, const Eigen::VectorXd& start,
                                    const BarrierOptions& options = {});

} // namespace hydrovalue::convex
