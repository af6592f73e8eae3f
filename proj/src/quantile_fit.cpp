#include "hydrovalue/quantile_fit.hpp"

#include <algorithm>
#include <cmath>

#include "hydrovalue/convex/lp.hpp"
#include "hydrovalue/error.hpp"
#include "hydrovalue/log.hpp"

namespace hydrovalue {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double QuantileModel::eval(double t_days) const { return basis.eval(t_days).dot(beta); }

double pinball_loss(double alpha, double residual) {
    return std::max(alpha * residual, (alpha - 1.0) * residual);
}

double total_pinball_loss(const InflowSeries& series, const QuantileModel& model) {
    double loss = 0.0;
    for (const auto& r : series.records()) {
        loss += pinball_loss(model.alpha, r.inflow_mw - model.eval(r.t_days));
    }
    return loss;
}

namespace {

// The residual-split primal
//   min alpha 1'u+ + (1-alpha) 1'u-   s.t.  X beta + u+ - u- = f
// is solved through its dual, a bounded LP in one variable per observation:
//   min -f'd   s.t.  X'd = (1-alpha) X'1,  0 <= d <= 1,
// whose equality multipliers are -beta. Only 1 + 2M rows, so the normal
// equations stay tiny regardless of the record length.
VectorXd solve_pinball_lp(const MatrixXd& X, const VectorXd& f, double alpha) {
    const Index n = X.rows();
    const Index p = X.cols();

    convex::LinearProgram lp;
    lp.c = -f;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(n * p));
    for (Index i = 0; i < n; ++i) {
        for (Index k = 0; k < p; ++k) {
            if (X(i, k) != 0.0) triplets.emplace_back(static_cast<int>(k), static_cast<int>(i), X(i, k));
        }
    }
    lp.A.resize(p, n);
    lp.A.setFromTriplets(triplets.begin(), triplets.end());
    lp.b = (1.0 - alpha) * X.transpose() * VectorXd::Ones(n);
    lp.lower = VectorXd::Zero(n);
    lp.upper = VectorXd::Ones(n);

    convex::LpOptions opt;
    opt.tolerance = 1e-10;
    opt.basic_solution = true;
    const auto sol = convex::solve_lp(lp, opt);
    if (sol.status != convex::LpStatus::optimal) {
        throw SolverError("quantile regression LP: " + convex::to_string(sol.status) +
                          " (cannot happen for a well-formed design; internal error)");
    }
    VectorXd beta = -sol.duals;

    // At a vertex the fractional d_i mark observations interpolated by the
    // optimal curve; solving for them directly removes interior-point noise.
    if (sol.basic) {
        std::vector<Index> interp;
        for (Index i = 0; i < n; ++i) {
            if (sol.x[i] > 1e-9 && sol.x[i] < 1.0 - 1e-9) interp.push_back(i);
        }
        if (static_cast<Index>(interp.size()) == p) {
            MatrixXd XB(p, p);
            VectorXd fB(p);
            for (Index k = 0; k < p; ++k) {
                XB.row(k) = X.row(interp[static_cast<std::size_t>(k)]);
                fB[k] = f[interp[static_cast<std::size_t>(k)]];
            }
            Eigen::FullPivLU<MatrixXd> lu(XB);
            if (lu.isInvertible()) {
                const VectorXd vertex_beta = lu.solve(fB);
                auto loss = [&](const VectorXd& b) {
                    const VectorXd r = f - X * b;
                    double total = 0.0;
                    for (Index i = 0; i < n; ++i) total += pinball_loss(alpha, r[i]);
                    return total;
                };
                if (loss(vertex_beta) <= loss(beta) + 1e-12 * (1.0 + f.cwiseAbs().sum())) {
                    beta = vertex_beta;
                }
            }
        }
    }
    return beta;
}

} // namespace

QuantileModel fit_quantile(const InflowSeries& series, double alpha, const FourierBasis& basis) {
    if (series.empty()) throw ValidationError("fit_quantile: empty series");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("fit_quantile: alpha must lie in (0, 1)");
    if (basis.harmonics < 1) throw ValidationError("fit_quantile: need at least one harmonic");

    QuantileModel model;
    model.alpha = alpha;
    model.basis = basis;

    const auto& recs = series.records();
    const double first = recs.front().inflow_mw;
    const bool constant = std::all_of(recs.begin(), recs.end(),
                                      [&](const InflowRecord& r) { return r.inflow_mw == first; });
    if (constant) {
        model.beta = VectorXd::Zero(basis.dimension());
        model.beta[0] = first;
        return model;
    }

    std::vector<double> t(recs.size());
    VectorXd f(static_cast<Index>(recs.size()));
    for (std::size_t i = 0; i < recs.size(); ++i) {
        t[i] = recs[i].t_days;
        f[static_cast<Index>(i)] = recs[i].inflow_mw;
    }
    model.beta = solve_pinball_lp(design_matrix(basis, t), f, alpha);
    return model;
}

QuantileFamily fit_quantile_family(const InflowSeries& series, const std::vector<double>& levels,
                                   const FourierBasis& basis) {
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0 && levels[i] < 1.0)) {
            throw ValidationError("quantile levels must lie in (0, 1)");
        }
        if (i > 0 && !(levels[i] > levels[i - 1])) {
            throw ValidationError("quantile levels must be strictly increasing");
        }
    }
    QuantileFamily family;
    family.basis = basis;
    family.levels = levels;
    for (double alpha : levels) family.models.push_back(fit_quantile(series, alpha, basis));
    return family;
}

double empirical_coverage(const InflowSeries& series, const QuantileModel& model) {
    if (series.empty()) return 0.0;
    std::size_t below = 0;
    for (const auto& r : series.records()) {
        if (r.inflow_mw <= model.eval(r.t_days)) ++below;
    }
    return static_cast<double>(below) / static_cast<double>(series.size());
}

QuantileGrid enforce_noncrossing(const QuantileFamily& family, const std::vector<double>& t_days) {
    QuantileGrid grid;
    grid.t_days = t_days;
    const Index levels = static_cast<Index>(family.models.size());
    grid.values.resize(static_cast<Index>(t_days.size()), levels);
    for (std::size_t i = 0; i < t_days.size(); ++i) {
        const Index row = static_cast<Index>(i);
        for (Index k = 0; k < levels; ++k) {
            grid.values(row, k) = family.models[static_cast<std::size_t>(k)].eval(t_days[i]);
        }
        bool sorted = true;
        for (Index k = 1; k < levels; ++k) sorted = sorted && grid.values(row, k - 1) <= grid.values(row, k);
        if (!sorted) {
            ++grid.crossings;
            std::sort(grid.values.row(row).begin(), grid.values.row(row).end());
        }
    }
    if (grid.crossings > 0) {
        warn("quantile curves cross at " + std::to_string(grid.crossings) + " of " +
             std::to_string(t_days.size()) + " grid points; values sorted pointwise");
    }
    return grid;
}

std::vector<double> weekly_grid() {
    std::vector<double> t(kWeeksPerYear);
    for (int w = 0; w < kWeeksPerYear; ++w) t[static_cast<std::size_t>(w)] = kDaysPerWeek * w;
    return t;
}

} // namespace hydrovalue
