#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "hydrovalue/convex/lp.hpp"
#include "hydrovalue/mdp.hpp"

namespace hydrovalue {

struct PricingOptions {
    convex::LpOptions lp;
    /// Replace the interior solution by the occupation measure of a
    /// deterministic policy read off the interior solution and the duals.
    bool purify = true;
    int max_improvement_steps = 100;
    double support_tol = 1e-9;
};

inline constexpr int kUnsupported = -1;

/// Stationary state-action distribution and the policy it encodes.
struct PolicySolution {
    Eigen::VectorXd y;            // index s * |A| + a
    double u = 0.0;               // objective, $/week
    double u_annual = 0.0;        // 52 * u
    std::vector<int> action;      // per state; kUnsupported where no mass
    std::vector<double> mass;     // sum over actions of y
    int multi_action_states = 0;  // supported states with more than one action above tolerance
    bool basic = false;           // y is the occupation measure of a deterministic policy
    int interior_multi_action_states = 0; // same count on the interior-point solution
    int improvement_steps = 0;    // policy-improvement pivots after purification
    Eigen::VectorXd bias;         // duals of the final basis, zero at the anchor; empty if not basic
    double stationarity_residual = 0.0;
    double normalization_residual = 0.0;
    convex::LpSolution lp;        // raw solver output, incl. equality duals

    std::size_t supported_states() const;
};

/// Gain and anchored relative values.
struct ValueSolution {
    double u = 0.0;
    Eigen::VectorXd v;
    int anchor = 0;
    /// max over (s, a) of u + v_s - c_sa - sum p v_s', scaled by 1 + max|c|.
    double max_violation = 0.0;
    /// max slack over pairs with y above the support tolerance (same scaling).
    double max_complementarity = 0.0;
};

/// min c'y  s.t.  sum_a y_s'a - sum_{s,a} p(s'|s,a) y_sa = 0 for all s',  sum y = 1,  y >= 0.
convex::LinearProgram build_primal_lp(const MdpModel& model);

PolicySolution solve_primal(const MdpModel& model, const PricingOptions& options = {});

/// State whose value is pinned to zero: full reservoir, median regime
/// floor((|R|+1)/2), week 1 for reservoir models; state 0 otherwise.
int anchor_state(const MdpModel& model);

/// Values from the equality multipliers of a primal solve: the basis duals
/// when the solution was purified, the interior-point multipliers otherwise.
ValueSolution values_from_primal(const MdpModel& model, const PolicySolution& primal, double support_tol = 1e-9);

/// Explicit dual LP in (u, v) with one slack per state-action pair. Intended
/// for small models: it has |S||A| rows.
ValueSolution solve_dual_explicit(const MdpModel& model, const PricingOptions& options = {});

/// Evaluates slack feasibility and complementarity of (u, v) against y.
void check_values(const MdpModel& model, ValueSolution& values, const Eigen::VectorXd* y, double support_tol);

struct OfferPoint {
    int level = 0;               // lower of the two adjacent levels
    double value_per_mwh = 0.0;  // (v_level - v_level+1) / block energy
    bool extrapolated = false;   // either level outside the primal support
};

struct OfferCurve {
    int week = 1;
    int regime = 1;
    std::vector<OfferPoint> points;
    bool monotone = true;             // v non-increasing in level (no negative marginal value)
    bool decreasing_marginals = true; // marginal values non-increasing in level
};

/// Empty week or regime lists select all.
std::vector<OfferCurve> offer_curves(const ValueSolution& values, const MdpModel& model, const PolicySolution* primal,
                                     std::vector<int> weeks = {}, std::vector<int> regimes = {});

struct PolicyCell {
    int week = 1;
    int regime = 1;
    int level = 0;
    bool supported = false;
    int action = kUnsupported;
    double release_mw = 0.0;
};

/// Dense 52 x |R| x (L+1) table in (week, regime, level) order.
std::vector<PolicyCell> policy_table(const PolicySolution& primal, const MdpModel& model);

void write_policy_csv(const std::filesystem::path& path, const std::vector<PolicyCell>& table);
void write_values_csv(const std::filesystem::path& path, const ValueSolution& values, const MdpModel& model,
                      const PolicySolution* primal);
void write_offer_curves_csv(const std::filesystem::path& path, const std::vector<OfferCurve>& curves);

struct PolicyEvaluation {
    double gain = 0.0;
    Eigen::VectorXd bias;       // relative values, zero at the anchor
    Eigen::VectorXd stationary; // stationary distribution of the induced chain
};

/// Gain, bias and stationary law of a deterministic policy. Throws
/// SolverError when the induced chain has more than one recurrent class.
PolicyEvaluation evaluate_policy(const MdpModel& model, const std::vector<int>& action, int anchor);

/// Exact gain of a deterministic policy: solves the stationary equations of
/// the induced chain. Actions must be given for every state.
double policy_gain(const MdpModel& model, const std::vector<int>& action);

} // namespace hydrovalue
