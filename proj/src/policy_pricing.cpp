#include "hydrovalue/policy_pricing.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include <Eigen/SparseLU>

#include "hydrovalue/error.hpp"
#include "hydrovalue/log.hpp"

namespace hydrovalue {

using convex::LinearProgram;
using convex::LpStatus;
using convex::SparseMatrix;
using Eigen::VectorXd;

namespace {

std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void require_optimal(const convex::LpSolution& sol, const char* what) {
    if (sol.status == LpStatus::optimal) return;
    std::string msg = std::string(what) + ": LP " + convex::to_string(sol.status);
    if (sol.status == LpStatus::infeasible) msg += " (a row-stochastic kernel cannot be infeasible; model bug)";
    msg += "; primal residual " + fmt(sol.primal_residual) + ", dual residual " + fmt(sol.dual_residual) +
           ", relative gap " + fmt(sol.relative_gap);
    throw SolverError(msg);
}

} // namespace

std::size_t PolicySolution::supported_states() const {
    return static_cast<std::size_t>(std::count_if(action.begin(), action.end(), [](int a) { return a != kUnsupported; }));
}

LinearProgram build_primal_lp(const MdpModel& m) {
    const int S = m.num_states;
    const int A = m.num_actions;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(m.nonzeros() + 2 * static_cast<std::size_t>(S) * A);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const auto col = static_cast<int>(m.pair(s, a));
            const auto k = static_cast<std::size_t>(col);
            double self = 1.0;
            for (auto e = m.row_start[k]; e < m.row_start[k + 1]; ++e) {
                const int s2 = m.next_state[static_cast<std::size_t>(e)];
                const double p = m.probability[static_cast<std::size_t>(e)];
                if (s2 == s) self -= p;
                else trip.emplace_back(s2, col, -p);
            }
            if (self != 0.0) trip.emplace_back(s, col, self);
            trip.emplace_back(S, col, 1.0);
        }
    }
    LinearProgram lp;
    lp.A.resize(S + 1, S * A);
    lp.A.setFromTriplets(trip.begin(), trip.end());
    lp.A.makeCompressed();
    lp.b = VectorXd::Zero(S + 1);
    lp.b[S] = 1.0;
    lp.c = Eigen::Map<const VectorXd>(m.cost.data(), static_cast<Eigen::Index>(m.cost.size()));
    return lp;
}

namespace {

int count_multi_action(const MdpModel& m, const VectorXd& y, double tol) {
    int multi = 0;
    for (int s = 0; s < m.num_states; ++s) {
        int count = 0;
        for (int a = 0; a < m.num_actions; ++a) count += y[m.pair(s, a)] > tol ? 1 : 0;
        if (count > 1) ++multi;
    }
    return multi;
}

// Largest-mass action on supported states, greedy action under the duals
// elsewhere; lowest action index on ties.
std::vector<int> purified_actions(const MdpModel& m, const VectorXd& y, const VectorXd& values, double tol) {
    std::vector<int> act(static_cast<std::size_t>(m.num_states), 0);
    for (int s = 0; s < m.num_states; ++s) {
        double best_y = tol;
        int pick = -1;
        for (int a = 0; a < m.num_actions; ++a) {
            if (y[m.pair(s, a)] > best_y) {
                best_y = y[m.pair(s, a)];
                pick = a;
            }
        }
        if (pick < 0) {
            double best_q = std::numeric_limits<double>::infinity();
            for (int a = 0; a < m.num_actions; ++a) {
                const auto k = static_cast<std::size_t>(m.pair(s, a));
                double q = m.cost[k];
                for (auto e = m.row_start[k]; e < m.row_start[k + 1]; ++e) {
                    q += m.probability[static_cast<std::size_t>(e)] * values[m.next_state[static_cast<std::size_t>(e)]];
                }
                if (pick < 0 || q < best_q - 1e-12 * (1.0 + std::abs(best_q))) {
                    best_q = q;
                    pick = a;
                }
            }
        }
        act[static_cast<std::size_t>(s)] = pick;
    }
    return act;
}

} // namespace

double greedy_q(const MdpModel& m, int s, int a, const VectorXd& values) {
    const auto k = static_cast<std::size_t>(m.pair(s, a));
    double q = m.cost[k];
    for (auto e = m.row_start[k]; e < m.row_start[k + 1]; ++e) {
        q += m.probability[static_cast<std::size_t>(e)] * values[m.next_state[static_cast<std::size_t>(e)]];
    }
    return q;
}

PolicySolution solve_primal(const MdpModel& m, const PricingOptions& opt) {
    const LinearProgram lp = build_primal_lp(m);
    PolicySolution ps;
    ps.lp = convex::solve_lp(lp, opt.lp);
    require_optimal(ps.lp, "primal state-action LP");

    ps.y = ps.lp.x.cwiseMax(0.0);
    ps.basic = ps.lp.basic;
    ps.u = ps.lp.objective;
    ps.interior_multi_action_states = count_multi_action(m, ps.y, opt.support_tol);

    if (opt.purify && !ps.basic) {
        // Start from the policy read off the interior point, then pivot with
        // policy improvement until no action improves on the basis values.
        auto act = purified_actions(m, ps.y, ps.lp.duals.head(m.num_states), opt.support_tol);
        double scale = 1.0;
        for (double c : m.cost) scale = std::max(scale, std::abs(c));
        const int anchor = anchor_state(m);
        try {
            PolicyEvaluation ev = evaluate_policy(m, act, anchor);
            for (int step = 0; step < opt.max_improvement_steps; ++step) {
                int switched = 0;
                for (int s = 0; s < m.num_states; ++s) {
                    auto& cur = act[static_cast<std::size_t>(s)];
                    double best = greedy_q(m, s, cur, ev.bias);
                    const double tol = 1e-10 * (scale + std::abs(best));
                    int pick = cur;
                    for (int a = 0; a < m.num_actions; ++a) {
                        const double q = greedy_q(m, s, a, ev.bias);
                        if (q < best - tol) {
                            best = q;
                            pick = a;
                        }
                    }
                    if (pick != cur) {
                        cur = pick;
                        ++switched;
                    }
                }
                if (switched == 0) break;
                ++ps.improvement_steps;
                ev = evaluate_policy(m, act, anchor);
            }
            // Among actions tied under the final values keep the lowest index,
            // so the extracted policy does not depend on the interior path.
            for (int pass = 0; pass < 5; ++pass) {
                std::vector<int> canon = act;
                for (int s = 0; s < m.num_states; ++s) {
                    double best = std::numeric_limits<double>::infinity();
                    for (int a = 0; a < m.num_actions; ++a) best = std::min(best, greedy_q(m, s, a, ev.bias));
                    const double tol = 1e-9 * (scale + std::abs(best));
                    for (int a = 0; a < m.num_actions; ++a) {
                        if (greedy_q(m, s, a, ev.bias) <= best + tol) {
                            canon[static_cast<std::size_t>(s)] = a;
                            break;
                        }
                    }
                }
                if (canon == act) break;
                const PolicyEvaluation next = evaluate_policy(m, canon, anchor);
                if (next.gain > ev.gain + 1e-9 * (1.0 + std::abs(ev.gain))) break;
                act = std::move(canon);
                ev = next;
            }
            if (ev.gain <= ps.u + 1e-7 * (1.0 + std::abs(ps.u))) {
                ps.y.setZero();
                for (int s = 0; s < m.num_states; ++s) ps.y[m.pair(s, act[static_cast<std::size_t>(s)])] = ev.stationary[s];
                ps.u = ev.gain;
                ps.bias = ev.bias;
                ps.basic = true;
            } else {
                warn("policy purification raised the cost; keeping the interior solution");
            }
        } catch (const SolverError&) {
            warn("purified policy is not unichain; keeping the interior solution");
        }
    }
    ps.u_annual = kWeeksPerYear * ps.u;

    const VectorXd r = lp.A * ps.y - lp.b;
    ps.stationarity_residual = r.head(m.num_states).cwiseAbs().maxCoeff();
    ps.normalization_residual = std::abs(r[m.num_states]);

    ps.action.assign(static_cast<std::size_t>(m.num_states), kUnsupported);
    ps.mass.assign(static_cast<std::size_t>(m.num_states), 0.0);
    for (int s = 0; s < m.num_states; ++s) {
        double best = 0.0;
        for (int a = 0; a < m.num_actions; ++a) {
            const double y = ps.y[m.pair(s, a)];
            ps.mass[static_cast<std::size_t>(s)] += y;
            if (y > opt.support_tol && y > best) {
                best = y;
                ps.action[static_cast<std::size_t>(s)] = a;
            }
        }
    }
    ps.multi_action_states = count_multi_action(m, ps.y, opt.support_tol);
    return ps;
}

int anchor_state(const MdpModel& m) {
    if (!m.config) return 0;
    const int median = (m.index.num_regimes + 1) / 2;
    return m.index.flat({m.config->storage_blocks, median, 1});
}

void check_values(const MdpModel& m, ValueSolution& vs, const VectorXd* y, double support_tol) {
    double scale = 1.0;
    for (double c : m.cost) scale = std::max(scale, 1.0 + std::abs(c));
    double violation = -std::numeric_limits<double>::infinity();
    double comp = 0.0;
    for (int s = 0; s < m.num_states; ++s) {
        for (int a = 0; a < m.num_actions; ++a) {
            const auto k = static_cast<std::size_t>(m.pair(s, a));
            double ev = 0.0;
            for (auto e = m.row_start[k]; e < m.row_start[k + 1]; ++e) {
                ev += m.probability[static_cast<std::size_t>(e)] * vs.v[m.next_state[static_cast<std::size_t>(e)]];
            }
            const double lhs_minus_rhs = vs.u + vs.v[s] - m.cost[k] - ev;
            violation = std::max(violation, lhs_minus_rhs);
            if (y && (*y)[static_cast<Eigen::Index>(k)] > support_tol) comp = std::max(comp, std::abs(lhs_minus_rhs));
        }
    }
    vs.max_violation = violation / scale;
    vs.max_complementarity = comp / scale;
}

ValueSolution values_from_primal(const MdpModel& m, const PolicySolution& primal, double support_tol) {
    ValueSolution vs;
    vs.anchor = anchor_state(m);
    if (primal.bias.size() == m.num_states) {
        vs.u = primal.u;
        vs.v = primal.bias.array() - primal.bias[vs.anchor];
    } else {
        const VectorXd& d = primal.lp.duals;
        vs.u = d[m.num_states];
        vs.v = d.head(m.num_states).array() - d[vs.anchor];
    }
    check_values(m, vs, &primal.y, support_tol);
    return vs;
}

ValueSolution solve_dual_explicit(const MdpModel& m, const PricingOptions& opt) {
    // Variables: u, v_0..v_{S-1}, slack per pair. Rows: u + v_s - sum p v_s' + slack_sa = c_sa.
    const int S = m.num_states;
    const int A = m.num_actions;
    const int pairs = S * A;
    std::vector<Eigen::Triplet<double>> trip;
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const auto row = static_cast<int>(m.pair(s, a));
            const auto k = static_cast<std::size_t>(row);
            trip.emplace_back(row, 0, 1.0);
            double self = 1.0;
            for (auto e = m.row_start[k]; e < m.row_start[k + 1]; ++e) {
                const int s2 = m.next_state[static_cast<std::size_t>(e)];
                const double p = m.probability[static_cast<std::size_t>(e)];
                if (s2 == s) self -= p;
                else trip.emplace_back(row, 1 + s2, -p);
            }
            if (self != 0.0) trip.emplace_back(row, 1 + s, self);
            trip.emplace_back(row, 1 + S + row, 1.0);
        }
    }
    // The value vector is only defined up to a shift; pin the anchor.
    const int anchor = anchor_state(m);
    LinearProgram lp;
    lp.A.resize(pairs, 1 + S + pairs);
    lp.A.setFromTriplets(trip.begin(), trip.end());
    lp.A.makeCompressed();
    lp.b = Eigen::Map<const VectorXd>(m.cost.data(), pairs);
    lp.c = VectorXd::Zero(1 + S + pairs);
    lp.c[0] = -1.0;
    lp.lower = VectorXd::Zero(1 + S + pairs);
    lp.upper = VectorXd::Constant(1 + S + pairs, convex::kInf);
    lp.lower.head(1 + S).setConstant(-convex::kInf);
    lp.lower[1 + anchor] = 0.0;
    lp.upper[1 + anchor] = 0.0;

    convex::LpOptions lo = opt.lp;
    lo.basic_solution = false;
    const auto sol = convex::solve_lp(lp, lo);
    require_optimal(sol, "dual value LP");

    ValueSolution vs;
    vs.u = sol.x[0];
    vs.anchor = anchor;
    vs.v = sol.x.segment(1, S);
    // The row multipliers of this LP are -y.
    const VectorXd y = (-sol.duals).cwiseMax(0.0);
    check_values(m, vs, &y, opt.support_tol);
    return vs;
}

std::vector<OfferCurve> offer_curves(const ValueSolution& vs, const MdpModel& m, const PolicySolution* primal,
                                     std::vector<int> weeks, std::vector<int> regimes) {
    if (!m.config) throw ValidationError("offer curves need a reservoir model");
    const SystemConfig& c = *m.config;
    if (weeks.empty()) {
        for (int w = 1; w <= kWeeksPerYear; ++w) weeks.push_back(w);
    }
    if (regimes.empty()) {
        for (int r = 1; r <= m.index.num_regimes; ++r) regimes.push_back(r);
    }
    const double energy = c.block_energy_mwh();
    // Rounding allowance for differences of large values.
    const double tol = 1e-10 * (1.0 + (vs.v.size() ? vs.v.cwiseAbs().maxCoeff() : 0.0)) / energy;
    std::vector<OfferCurve> out;
    for (int w : weeks) {
        if (w < 1 || w > kWeeksPerYear) throw ValidationError("offer curve week out of range: " + std::to_string(w));
        for (int r : regimes) {
            if (r < 1 || r > m.index.num_regimes) throw ValidationError("offer curve regime out of range: " + std::to_string(r));
            OfferCurve curve;
            curve.week = w;
            curve.regime = r;
            for (int l = 0; l < c.storage_blocks; ++l) {
                const int s0 = m.index.flat({l, r, w});
                const int s1 = m.index.flat({l + 1, r, w});
                OfferPoint p;
                p.level = l;
                p.value_per_mwh = (vs.v[s0] - vs.v[s1]) / energy;
                if (primal) {
                    p.extrapolated = primal->action[static_cast<std::size_t>(s0)] == kUnsupported ||
                                     primal->action[static_cast<std::size_t>(s1)] == kUnsupported;
                }
                if (p.value_per_mwh < -tol) curve.monotone = false;
                if (!curve.points.empty() && p.value_per_mwh > curve.points.back().value_per_mwh + tol) {
                    curve.decreasing_marginals = false;
                }
                curve.points.push_back(p);
            }
            out.push_back(std::move(curve));
        }
    }
    return out;
}

std::vector<PolicyCell> policy_table(const PolicySolution& ps, const MdpModel& m) {
    if (!m.config) throw ValidationError("policy table needs a reservoir model");
    std::vector<PolicyCell> table;
    table.reserve(static_cast<std::size_t>(m.num_states));
    for (int w = 1; w <= kWeeksPerYear; ++w) {
        for (int r = 1; r <= m.index.num_regimes; ++r) {
            for (int l = 0; l < m.index.num_levels; ++l) {
                const int s = m.index.flat({l, r, w});
                PolicyCell cell;
                cell.week = w;
                cell.regime = r;
                cell.level = l;
                cell.action = ps.action[static_cast<std::size_t>(s)];
                cell.supported = cell.action != kUnsupported;
                if (cell.supported) cell.release_mw = cell.action * m.config->block_mw;
                table.push_back(cell);
            }
        }
    }
    return table;
}

void write_policy_csv(const std::filesystem::path& path, const std::vector<PolicyCell>& table) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "week,regime,level,release_mw,supported\n";
    for (const auto& c : table) {
        out << c.week << ',' << c.regime << ',' << c.level << ',' << (c.supported ? fmt(c.release_mw) : "unsupported")
            << ',' << (c.supported ? 1 : 0) << '\n';
    }
}

void write_values_csv(const std::filesystem::path& path, const ValueSolution& vs, const MdpModel& m,
                      const PolicySolution* primal) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "week,regime,level,v_dollars,supported\n";
    for (int w = 1; w <= kWeeksPerYear; ++w) {
        for (int r = 1; r <= m.index.num_regimes; ++r) {
            for (int l = 0; l < m.index.num_levels; ++l) {
                const int s = m.index.flat({l, r, w});
                const bool sup = !primal || primal->action[static_cast<std::size_t>(s)] != kUnsupported;
                out << w << ',' << r << ',' << l << ',' << fmt(vs.v[s]) << ',' << (sup ? 1 : 0) << '\n';
            }
        }
    }
}

void write_offer_curves_csv(const std::filesystem::path& path, const std::vector<OfferCurve>& curves) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << "week,regime,level,marginal_value_per_mwh,extrapolated\n";
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            out << c.week << ',' << c.regime << ',' << p.level << ',' << fmt(p.value_per_mwh) << ','
                << (p.extrapolated ? 1 : 0) << '\n';
        }
    }
}

PolicyEvaluation evaluate_policy(const MdpModel& m, const std::vector<int>& action, int anchor) {
    const int S = m.num_states;
    if (static_cast<int>(action.size()) != S) throw ValidationError("policy evaluation: one action per state required");
    if (anchor < 0 || anchor >= S) throw ValidationError("policy evaluation: anchor out of range");
    // B x = c with x = (h, g in place of h_anchor): h_s + g - sum p h = c_s.
    // The same matrix gives the stationary law: B' pi = e_anchor.
    std::vector<Eigen::Triplet<double>> trip;
    VectorXd c(S);
    for (int s = 0; s < S; ++s) {
        const int a = action[static_cast<std::size_t>(s)];
        if (a < 0 || a >= m.num_actions) throw ValidationError("policy evaluation: action out of range");
        const auto k = static_cast<std::size_t>(m.pair(s, a));
        c[s] = m.cost[k];
        if (s != anchor) trip.emplace_back(s, s, 1.0);
        trip.emplace_back(s, anchor, 1.0);
        for (auto e = m.row_start[k]; e < m.row_start[k + 1]; ++e) {
            const int s2 = m.next_state[static_cast<std::size_t>(e)];
            if (s2 != anchor) trip.emplace_back(s, s2, -m.probability[static_cast<std::size_t>(e)]);
        }
    }
    SparseMatrix B(S, S);
    B.setFromTriplets(trip.begin(), trip.end());
    B.makeCompressed();
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(B);
    if (lu.info() != Eigen::Success) throw SolverError("policy evaluation: induced chain is not unichain");

    VectorXd x = lu.solve(c);
    x += lu.solve(VectorXd(c - B * x));
    VectorXd e = VectorXd::Zero(S);
    e[anchor] = 1.0;
    const SparseMatrix Bt = B.transpose();
    VectorXd pi = lu.transpose().solve(e);
    pi += lu.transpose().solve(VectorXd(e - Bt * pi));

    const double scale = 1.0 + c.cwiseAbs().maxCoeff() + x.cwiseAbs().maxCoeff();
    if (!x.allFinite() || !pi.allFinite() || (B * x - c).cwiseAbs().maxCoeff() > 1e-9 * scale ||
        (Bt * pi - e).cwiseAbs().maxCoeff() > 1e-9 || pi.minCoeff() < -1e-9) {
        throw SolverError("policy evaluation: induced chain is not unichain");
    }
    PolicyEvaluation ev;
    ev.gain = x[anchor];
    ev.bias = x;
    ev.bias[anchor] = 0.0;
    ev.stationary = pi.cwiseMax(0.0);
    return ev;
}

double policy_gain(const MdpModel& m, const std::vector<int>& action) {
    return evaluate_policy(m, action, 0).gain;
}

} // namespace hydrovalue
