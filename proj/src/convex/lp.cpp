#include "hydrovalue/convex/lp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "hydrovalue/error.hpp"
#include "standard_form.hpp"

namespace hydrovalue::convex {

using Eigen::Index;
using Eigen::VectorXd;
using detail::ColumnKind;
using detail::StandardForm;

std::string to_string(LpStatus status) {
    switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration-limit";
    }
    return "unknown";
}

void LinearProgram::validate() const {
    const Index n = A.cols();
    const Index m = A.rows();
    if (c.size() != n) throw ValidationError("LP: objective length does not match columns");
    if (b.size() != m) throw ValidationError("LP: rhs length does not match rows");
    if (lower.size() != 0 && lower.size() != n) throw ValidationError("LP: lower bound length");
    if (upper.size() != 0 && upper.size() != n) throw ValidationError("LP: upper bound length");
    if (!c.allFinite() || !b.allFinite()) throw ValidationError("LP: non-finite objective or rhs");
    for (Index k = 0; k < A.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
            if (!std::isfinite(it.value())) throw ValidationError("LP: non-finite coefficient");
        }
    }
    for (Index j = 0; j < n; ++j) {
        const double l = lower_bound(j);
        const double u = upper_bound(j);
        if (std::isnan(l) || std::isnan(u) || l == kInf || u == -kInf || l > u) {
            throw ValidationError("LP: invalid bounds on variable " + std::to_string(j));
        }
    }
}

namespace detail {

StandardForm StandardForm::build(const LinearProgram& lp) {
    StandardForm sf;
    const Index n = lp.num_vars();
    const Index m = lp.num_rows();
    sf.map.resize(static_cast<std::size_t>(n));

    SparseMatrix A = lp.A;
    A.makeCompressed();
    VectorXd b = lp.b;

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(A.nonZeros()));
    std::vector<double> cost;
    std::vector<double> upper;
    Index next = 0;
    auto add_column = [&](Index j, double sign, double cj, double uj) {
        for (SparseMatrix::InnerIterator it(A, j); it; ++it) {
            triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(next),
                                  sign * it.value());
        }
        cost.push_back(sign * cj);
        upper.push_back(uj);
        return next++;
    };

    for (Index j = 0; j < n; ++j) {
        const double l = lp.lower_bound(j);
        const double u = lp.upper_bound(j);
        auto& cm = sf.map[static_cast<std::size_t>(j)];
        if (std::isfinite(l) && l == u) {
            cm.kind = ColumnKind::fixed;
            cm.offset = l;
            if (l != 0.0) b -= l * VectorXd(A.col(j));
        } else if (std::isfinite(l)) {
            cm.kind = ColumnKind::shifted_lower;
            cm.offset = l;
            if (l != 0.0) b -= l * VectorXd(A.col(j));
            cm.col = add_column(j, 1.0, lp.c[j], u - l);
        } else if (std::isfinite(u)) {
            cm.kind = ColumnKind::negated_upper;
            cm.offset = u;
            if (u != 0.0) b -= u * VectorXd(A.col(j));
            cm.col = add_column(j, -1.0, lp.c[j], kInf);
        } else {
            cm.kind = ColumnKind::split_free;
            cm.col = add_column(j, 1.0, lp.c[j], kInf);
            cm.col2 = add_column(j, -1.0, lp.c[j], kInf);
        }
    }

    sf.A.resize(m, next);
    sf.A.setFromTriplets(triplets.begin(), triplets.end());
    sf.A.makeCompressed();
    sf.c = Eigen::Map<VectorXd>(cost.data(), next);
    sf.u = Eigen::Map<VectorXd>(upper.data(), next);
    sf.b = b;

    const double cmax = next > 0 ? sf.c.cwiseAbs().maxCoeff() : 0.0;
    sf.c_scale = cmax > 0.0 ? cmax : 1.0;
    double bmax = m > 0 ? sf.b.cwiseAbs().maxCoeff() : 0.0;
    for (Index j = 0; j < next; ++j) {
        if (sf.bounded(j)) bmax = std::max(bmax, sf.u[j]);
    }
    sf.b_scale = bmax > 0.0 ? bmax : 1.0;
    sf.c /= sf.c_scale;
    sf.b /= sf.b_scale;
    for (Index j = 0; j < next; ++j) {
        if (sf.bounded(j)) sf.u[j] /= sf.b_scale;
    }
    return sf;
}

VectorXd StandardForm::to_original(const VectorXd& x_std) const {
    VectorXd x(static_cast<Index>(map.size()));
    for (std::size_t j = 0; j < map.size(); ++j) {
        const auto& cm = map[j];
        const Index jj = static_cast<Index>(j);
        switch (cm.kind) {
        case ColumnKind::fixed: x[jj] = cm.offset; break;
        case ColumnKind::shifted_lower: x[jj] = cm.offset + b_scale * x_std[cm.col]; break;
        case ColumnKind::negated_upper: x[jj] = cm.offset - b_scale * x_std[cm.col]; break;
        case ColumnKind::split_free:
            x[jj] = b_scale * (x_std[cm.col] - x_std[cm.col2]);
            break;
        }
    }
    return x;
}

} // namespace detail

namespace {

/// A * diag(theta) * A' + reg * I on a pattern computed once, factorized by
/// a simplicial LDL' with approximate minimum degree ordering.
class NormalEquations {
public:
    explicit NormalEquations(const SparseMatrix& A) : A_(A), At_(A.transpose()) {
        const Index m = A.rows();
        At_.makeCompressed();
        // Row-major view of A is the column-major transpose.
        std::vector<Index> mark(static_cast<std::size_t>(m), -1);
        std::vector<Eigen::Triplet<double>> pattern;
        for (Index k = 0; k < m; ++k) {
            pattern.emplace_back(static_cast<int>(k), static_cast<int>(k), 0.0);
            mark[static_cast<std::size_t>(k)] = k;
            for (SparseMatrix::InnerIterator rj(At_, k); rj; ++rj) {
                for (SparseMatrix::InnerIterator ci(A_, rj.row()); ci; ++ci) {
                    const Index i = ci.row();
                    if (i > k && mark[static_cast<std::size_t>(i)] != k) {
                        mark[static_cast<std::size_t>(i)] = k;
                        pattern.emplace_back(static_cast<int>(i), static_cast<int>(k), 0.0);
                    }
                }
            }
        }
        M_.resize(m, m);
        M_.setFromTriplets(pattern.begin(), pattern.end());
        M_.makeCompressed();
        acc_.assign(static_cast<std::size_t>(m), 0.0);
        ldlt_.analyzePattern(M_);
    }

    bool factor(const VectorXd& theta, double reg) {
        const Index m = M_.cols();
        const int* outer = M_.outerIndexPtr();
        const int* inner = M_.innerIndexPtr();
        double* values = M_.valuePtr();
        for (Index k = 0; k < m; ++k) {
            for (SparseMatrix::InnerIterator rj(At_, k); rj; ++rj) {
                const Index j = rj.row();
                const double scale = rj.value() * theta[j];
                for (SparseMatrix::InnerIterator ci(A_, j); ci; ++ci) {
                    if (ci.row() >= k) acc_[static_cast<std::size_t>(ci.row())] += scale * ci.value();
                }
            }
            for (int p = outer[k]; p < outer[k + 1]; ++p) {
                values[p] = acc_[static_cast<std::size_t>(inner[p])];
                acc_[static_cast<std::size_t>(inner[p])] = 0.0;
            }
        }
        reg_ = reg;
        if (reg_ > 0.0) {
            for (Index k = 0; k < m; ++k) values[outer[k]] += reg_;
        }
        theta_ = &theta;
        ldlt_.factorize(M_);
        return ldlt_.info() == Eigen::Success;
    }

    /// Rows whose LDL' pivot is negligible relative to their diagonal entry,
    /// i.e. rows linearly dependent on rows eliminated before them.
    std::vector<Index> negligible_pivots(double rel) const {
        const auto& perm = ldlt_.permutationP().indices();
        const VectorXd d = ldlt_.vectorD();
        const int* outer = M_.outerIndexPtr();
        const double* values = M_.valuePtr();
        std::vector<Index> rows;
        for (Index i = 0; i < M_.cols(); ++i) {
            const double diag = values[outer[i]] - reg_;
            if (std::abs(d[perm[i]]) <= rel * std::max(diag, 1e-300)) rows.push_back(i);
        }
        return rows;
    }

    /// Solves (A Theta A') dy = rhs with one step of iterative refinement
    /// against the unregularized operator.
    VectorXd solve(const VectorXd& rhs) const {
        VectorXd dy = ldlt_.solve(rhs);
        const VectorXd residual = rhs - apply(dy);
        dy += ldlt_.solve(residual);
        return dy;
    }

private:
    VectorXd apply(const VectorXd& v) const {
        VectorXd t = At_ * v;
        t.array() *= theta_->array();
        return A_ * t;
    }

    const SparseMatrix& A_;
    SparseMatrix At_;
    SparseMatrix M_;
    std::vector<double> acc_;
    const VectorXd* theta_ = nullptr;
    double reg_ = 0.0;
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

constexpr double kFreeRegularization = 1e-8;

double max_step(const VectorXd& v, const VectorXd& dv, const std::vector<char>* mask = nullptr) {
    double alpha = 1.0;
    for (Index j = 0; j < v.size(); ++j) {
        if (mask && !(*mask)[static_cast<std::size_t>(j)]) continue;
        if (dv[j] < 0.0) alpha = std::min(alpha, -v[j] / dv[j]);
    }
    return alpha;
}

struct Direction {
    VectorXd dx, dy, dz, dw, ds;
};

class InteriorPoint {
public:
    InteriorPoint(const StandardForm& sf, const LpOptions& opt)
        : sf_(sf), opt_(opt), m_(sf.rows()), n_(sf.cols()), normal_(sf.A) {
        bounded_.resize(static_cast<std::size_t>(n_));
        nb_ = 0;
        for (Index j = 0; j < n_; ++j) {
            bounded_[static_cast<std::size_t>(j)] = sf.bounded(j) ? 1 : 0;
            nb_ += bounded_[static_cast<std::size_t>(j)];
        }
        u_fin_ = sf.u;
        for (Index j = 0; j < n_; ++j) {
            if (!bounded_[static_cast<std::size_t>(j)]) u_fin_[j] = 0.0;
        }
        split_.assign(static_cast<std::size_t>(n_), 0);
        for (const auto& cm : sf.map) {
            if (cm.kind != ColumnKind::split_free) continue;
            split_[static_cast<std::size_t>(cm.col)] = 1;
            split_[static_cast<std::size_t>(cm.col2)] = 1;
        }
    }

    LpStatus run();

    VectorXd x, y, z, w, s;
    int iterations = 0;
    VectorXd ray;

private:
    void initial_point();
    Direction solve_newton(const VectorXd& theta, const VectorXd& rp, const VectorXd& ru,
                           const VectorXd& rd, const VectorXd& rxz, const VectorXd& rws) const;

    const StandardForm& sf_;
    const LpOptions& opt_;
    Index m_, n_;
    NormalEquations normal_;
    std::vector<char> bounded_;
    std::vector<char> split_; // halves of a split free variable
    Index nb_ = 0;
    VectorXd u_fin_;
};

void InteriorPoint::initial_point() {
    const VectorXd ones = VectorXd::Ones(n_);
    if (!normal_.factor(ones, 1e-10)) throw SolverError("LP: cannot factor A A'");
    const VectorXd v = normal_.solve(sf_.b);
    x = sf_.A.transpose() * v;
    y = normal_.solve(sf_.A * sf_.c);
    VectorXd zt = sf_.c - sf_.A.transpose() * y;

    for (Index j = 0; j < n_; ++j) {
        if (bounded_[static_cast<std::size_t>(j)]) {
            x[j] = std::clamp(x[j], 0.1 * sf_.u[j], 0.9 * sf_.u[j]);
        }
    }
    const double dx = std::max(-1.5 * x.minCoeff(), 0.0);
    x.array() += dx;
    z.setZero(n_);
    s.setZero(n_);
    for (Index j = 0; j < n_; ++j) {
        if (bounded_[static_cast<std::size_t>(j)]) {
            z[j] = std::max(zt[j], 0.0);
            s[j] = std::max(-zt[j], 0.0);
        } else {
            z[j] = zt[j];
        }
    }
    const double dz = std::max(-1.5 * z.minCoeff(), 0.0);
    z.array() += dz;
    for (Index j = 0; j < n_; ++j) {
        if (bounded_[static_cast<std::size_t>(j)]) s[j] += dz;
    }

    w.setZero(n_);
    for (Index j = 0; j < n_; ++j) {
        if (bounded_[static_cast<std::size_t>(j)]) {
            x[j] = std::min(x[j], 0.9 * sf_.u[j]);
            w[j] = sf_.u[j] - x[j];
        }
    }
    const double xz = x.dot(z) + w.dot(s);
    const double xsum = x.sum() + w.sum();
    const double zsum = z.sum() + s.sum();
    if (xz > 0.0 && xsum > 0.0 && zsum > 0.0) {
        const double shift_x = 0.5 * xz / zsum;
        const double shift_z = 0.5 * xz / xsum;
        for (Index j = 0; j < n_; ++j) {
            if (bounded_[static_cast<std::size_t>(j)]) {
                const double room = 0.5 * std::min(x[j], w[j]);
                const double sh = std::min(shift_x, room);
                x[j] += sh;
                w[j] -= sh;
                s[j] += shift_z;
            } else {
                x[j] += shift_x;
            }
            z[j] += shift_z;
        }
    }
    const double floor = 1e-2;
    for (Index j = 0; j < n_; ++j) {
        if (bounded_[static_cast<std::size_t>(j)]) {
            if (x[j] <= 0.0 || w[j] <= 0.0) {
                x[j] = 0.5 * sf_.u[j];
                w[j] = 0.5 * sf_.u[j];
            }
            s[j] = std::max(s[j], floor);
        } else {
            x[j] = std::max(x[j], floor);
        }
        z[j] = std::max(z[j], floor);
    }
}

Direction InteriorPoint::solve_newton(const VectorXd& theta, const VectorXd& rp,
                                      const VectorXd& ru, const VectorXd& rd,
                                      const VectorXd& rxz, const VectorXd& rws) const {
    VectorXd rhat = rd - rxz.cwiseQuotient(x);
    for (Index j = 0; j < n_; ++j) {
        if (bounded_[static_cast<std::size_t>(j)]) rhat[j] += (rws[j] - s[j] * ru[j]) / w[j];
    }
    const VectorXd rhs = rp + sf_.A * theta.cwiseProduct(rhat);
    Direction d;
    d.dy = normal_.solve(rhs);
    d.dx = theta.cwiseProduct(sf_.A.transpose() * d.dy - rhat);
    d.dz = (rxz - z.cwiseProduct(d.dx)).cwiseQuotient(x);
    d.dw.setZero(n_);
    d.ds.setZero(n_);
    for (Index j = 0; j < n_; ++j) {
        if (bounded_[static_cast<std::size_t>(j)]) {
            d.dw[j] = ru[j] - d.dx[j];
            d.ds[j] = (rws[j] - s[j] * d.dw[j]) / w[j];
        }
    }
    return d;
}

LpStatus InteriorPoint::run() {
    initial_point();
    const double bnorm = std::max(sf_.b.cwiseAbs().maxCoeff(), u_fin_.cwiseAbs().maxCoeff());
    const double cnorm = sf_.c.cwiseAbs().maxCoeff();
    const double dof = static_cast<double>(n_ + nb_);
    const double eta_max = 0.9999;
    double best_merit = kInf;
    int stall = 0;

    for (iterations = 0; iterations < opt_.max_iterations; ++iterations) {
        const VectorXd rp = sf_.b - sf_.A * x;
        VectorXd ru = VectorXd::Zero(n_);
        for (Index j = 0; j < n_; ++j) {
            if (bounded_[static_cast<std::size_t>(j)]) ru[j] = sf_.u[j] - x[j] - w[j];
        }
        const VectorXd rd = sf_.c - sf_.A.transpose() * y - z + s;
        const double pobj = sf_.c.dot(x);
        const double dobj = sf_.b.dot(y) - u_fin_.dot(s);
        const double mu = (x.dot(z) + w.dot(s)) / dof;

        const double pinf = std::max(rp.cwiseAbs().maxCoeff(), ru.cwiseAbs().maxCoeff()) /
                            (1.0 + bnorm);
        const double dinf = rd.cwiseAbs().maxCoeff() / (1.0 + cnorm);
        const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
        if (opt_.verbose) {
            std::cerr << "ipm " << std::setw(3) << iterations << std::scientific
                      << std::setprecision(3) << "  pobj " << pobj << "  dobj " << dobj
                      << "  pinf " << pinf << "  dinf " << dinf << "  gap " << gap << "  mu "
                      << mu << std::defaultfloat << '\n';
        }
        if (pinf <= opt_.tolerance && dinf <= opt_.tolerance && gap <= opt_.tolerance) {
            return LpStatus::optimal;
        }

        // Divergence checks: growing primal iterate with vanishing dual
        // infeasibility indicates unboundedness, and growing duals with a
        // stalled primal residual indicates infeasibility.
        const double xnorm = x.cwiseAbs().maxCoeff();
        const double ynorm = y.cwiseAbs().maxCoeff();
        if (xnorm > 1e10 * (1.0 + bnorm) && pobj < -1e8) {
            ray = x / xnorm;
            return LpStatus::unbounded;
        }
        if (ynorm > 1e10 * (1.0 + cnorm) && dobj > 1e8) {
            ray = y / ynorm;
            return LpStatus::infeasible;
        }
        const double merit = std::max({pinf, dinf, gap});
        if (merit < 0.9 * best_merit) {
            best_merit = merit;
            stall = 0;
        } else if (++stall > 30) {
            return LpStatus::iteration_limit;
        }

        VectorXd theta(n_);
        for (Index j = 0; j < n_; ++j) {
            double inv = z[j] / x[j];
            if (bounded_[static_cast<std::size_t>(j)]) inv += s[j] / w[j];
            // Both halves of a split free variable drift upward together; a
            // small proximal term keeps their normal-equation weight bounded.
            theta[j] = 1.0 / (inv + (split_[static_cast<std::size_t>(j)] ? kFreeRegularization : 1e-14));
        }
        double reg = opt_.dual_regularization;
        while (!normal_.factor(theta, reg)) {
            reg = reg > 0.0 ? reg * 100.0 : 1e-12;
            if (reg > 1e-4) throw SolverError("LP: normal equations are numerically singular");
        }

        // Predictor.
        const VectorXd rxz_aff = -x.cwiseProduct(z);
        const VectorXd rws_aff = -w.cwiseProduct(s);
        const Direction aff = solve_newton(theta, rp, ru, rd, rxz_aff, rws_aff);
        const double ap_aff = std::min(max_step(x, aff.dx), max_step(w, aff.dw, &bounded_));
        const double ad_aff = std::min(max_step(z, aff.dz), max_step(s, aff.ds, &bounded_));
        const double mu_aff =
            ((x + ap_aff * aff.dx).dot(z + ad_aff * aff.dz) +
             (w + ap_aff * aff.dw).dot(s + ad_aff * aff.ds)) / dof;
        const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

        // Corrector.
        const VectorXd rxz = VectorXd::Constant(n_, sigma * mu) - x.cwiseProduct(z) -
                             aff.dx.cwiseProduct(aff.dz);
        VectorXd rws = VectorXd::Zero(n_);
        for (Index j = 0; j < n_; ++j) {
            if (bounded_[static_cast<std::size_t>(j)]) {
                rws[j] = sigma * mu - w[j] * s[j] - aff.dw[j] * aff.ds[j];
            }
        }
        const Direction d = solve_newton(theta, rp, ru, rd, rxz, rws);
        const double eta = std::max(0.95, std::min(eta_max, 1.0 - mu));
        const double ap = std::min(1.0, eta * std::min(max_step(x, d.dx), max_step(w, d.dw, &bounded_)));
        const double ad = std::min(1.0, eta * std::min(max_step(z, d.dz), max_step(s, d.ds, &bounded_)));

        x += ap * d.dx;
        w += ap * d.dw;
        y += ad * d.dy;
        z += ad * d.dz;
        s += ad * d.ds;
    }
    return LpStatus::iteration_limit;
}

std::vector<Index> dependent_rows(const SparseMatrix& A) {
    NormalEquations probe(A);
    const VectorXd ones = VectorXd::Ones(A.cols());
    if (!probe.factor(ones, 0.0)) {
        if (!probe.factor(ones, 1e-13)) throw SolverError("LP: cannot factor A A'");
    }
    return probe.negligible_pivots(1e-10);
}

LpSolution solve_box_only(const LinearProgram& lp) {
    LpSolution sol;
    const Index n = lp.num_vars();
    sol.x.resize(n);
    sol.duals.resize(0);
    sol.reduced_costs = lp.c;
    sol.status = LpStatus::optimal;
    for (Index j = 0; j < n; ++j) {
        const double l = lp.lower_bound(j);
        const double u = lp.upper_bound(j);
        if (lp.c[j] > 0.0) {
            sol.x[j] = l;
        } else if (lp.c[j] < 0.0) {
            sol.x[j] = u;
        } else {
            sol.x[j] = std::isfinite(l) ? l : (std::isfinite(u) ? u : 0.0);
        }
        if (!std::isfinite(sol.x[j])) {
            sol.status = LpStatus::unbounded;
            sol.ray = VectorXd::Zero(n);
            sol.ray[j] = lp.c[j] > 0.0 ? -1.0 : 1.0;
            return sol;
        }
    }
    sol.objective = lp.c.dot(sol.x);
    sol.dual_objective = sol.objective;
    sol.basic = true;
    return sol;
}

void fill_diagnostics(const LinearProgram& lp, LpSolution& sol) {
    const Index n = lp.num_vars();
    sol.objective = lp.c.dot(sol.x);
    sol.reduced_costs = lp.c - lp.A.transpose() * sol.duals;
    sol.primal_residual = lp.num_rows() ? (lp.A * sol.x - lp.b).cwiseAbs().maxCoeff() : 0.0;
    double dual_obj = lp.b.dot(sol.duals);
    double dual_inf = 0.0;
    for (Index j = 0; j < n; ++j) {
        const double rc = sol.reduced_costs[j];
        const double l = lp.lower_bound(j);
        const double u = lp.upper_bound(j);
        const double zp = std::max(rc, 0.0);
        const double zn = std::max(-rc, 0.0);
        if (std::isfinite(l)) dual_obj += l * zp;
        else dual_inf = std::max(dual_inf, zp);
        if (std::isfinite(u)) dual_obj -= u * zn;
        else dual_inf = std::max(dual_inf, zn);
    }
    sol.dual_objective = dual_obj;
    sol.dual_residual = dual_inf;
    sol.relative_gap = std::abs(sol.objective - dual_obj) / (1.0 + std::abs(sol.objective));
}

} // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options) {
    lp.validate();
    if (lp.num_rows() == 0) return solve_box_only(lp);

    const StandardForm sf = StandardForm::build(lp);
    LpSolution sol;
    if (sf.cols() == 0) {
        sol.x = sf.to_original(VectorXd());
        sol.duals = VectorXd::Zero(lp.num_rows());
        sol.status = sf.b.cwiseAbs().maxCoeff() <= options.tolerance ? LpStatus::optimal
                                                                       : LpStatus::infeasible;
        fill_diagnostics(lp, sol);
        return sol;
    }

    // Linearly dependent equality rows (e.g. stationarity rows of a Markov
    // chain, which sum to zero) make the normal equations singular; they are
    // dropped for the interior-point phase and get zero multipliers.
    const std::vector<Index> dropped = dependent_rows(sf.A);
    StandardForm reduced = sf;
    std::vector<Index> kept;
    if (!dropped.empty()) {
        std::vector<char> drop(static_cast<std::size_t>(sf.rows()), 0);
        for (Index i : dropped) drop[static_cast<std::size_t>(i)] = 1;
        std::vector<Eigen::Triplet<double>> sel;
        for (Index i = 0; i < sf.rows(); ++i) {
            if (!drop[static_cast<std::size_t>(i)]) {
                sel.emplace_back(static_cast<int>(kept.size()), static_cast<int>(i), 1.0);
                kept.push_back(i);
            }
        }
        SparseMatrix S(static_cast<Index>(kept.size()), sf.rows());
        S.setFromTriplets(sel.begin(), sel.end());
        reduced.A = S * sf.A;
        reduced.A.makeCompressed();
        reduced.b = S * sf.b;
    }

    InteriorPoint ipm(reduced, options);
    sol.status = ipm.run();
    if (!dropped.empty()) {
        VectorXd y_full = VectorXd::Zero(sf.rows());
        for (std::size_t r = 0; r < kept.size(); ++r) y_full[kept[r]] = ipm.y[static_cast<Index>(r)];
        ipm.y = y_full;
        const double resid = (sf.A * ipm.x - sf.b).cwiseAbs().maxCoeff();
        if (sol.status == LpStatus::optimal && resid > 1e3 * options.tolerance) {
            sol.status = LpStatus::infeasible;
        }
    }
    sol.iterations = ipm.iterations;
    if (sol.status == LpStatus::infeasible) {
        sol.ray = ipm.ray;
    } else if (sol.status == LpStatus::unbounded) {
        sol.ray = sf.to_original(ipm.ray) - sf.to_original(VectorXd::Zero(sf.cols()));
    }

    VectorXd x_std = ipm.x;
    if (sol.status == LpStatus::optimal && options.basic_solution) {
        const auto cross = detail::crossover_to_vertex(reduced, ipm.x, ipm.z, ipm.s);
        if (cross.success) {
            x_std = cross.x;
            sol.basic = true;
        }
        sol.crossover_moves = cross.moves;
    }
    sol.x = sf.to_original(x_std);
    sol.duals = ipm.y * sf.c_scale;
    fill_diagnostics(lp, sol);
    return sol;
}

void write_mps(std::ostream& out, const LinearProgram& lp, const std::string& name) {
    const Index n = lp.num_vars();
    const Index m = lp.num_rows();
    out << std::setprecision(17);
    out << "NAME " << name << "\nROWS\n N  OBJ\n";
    for (Index i = 0; i < m; ++i) out << " E  R" << i << '\n';
    out << "COLUMNS\n";
    for (Index j = 0; j < n; ++j) {
        if (lp.c[j] != 0.0) out << "    X" << j << " OBJ " << lp.c[j] << '\n';
        for (SparseMatrix::InnerIterator it(lp.A, j); it; ++it) {
            out << "    X" << j << " R" << it.row() << ' ' << it.value() << '\n';
        }
    }
    out << "RHS\n";
    for (Index i = 0; i < m; ++i) {
        if (lp.b[i] != 0.0) out << "    RHS R" << i << ' ' << lp.b[i] << '\n';
    }
    out << "BOUNDS\n";
    for (Index j = 0; j < n; ++j) {
        const double l = lp.lower_bound(j);
        const double u = lp.upper_bound(j);
        if (!std::isfinite(l) && !std::isfinite(u)) {
            out << " FR BND X" << j << '\n';
            continue;
        }
        if (l == u) {
            out << " FX BND X" << j << ' ' << l << '\n';
            continue;
        }
        if (!std::isfinite(l)) out << " MI BND X" << j << '\n';
        else if (l != 0.0) out << " LO BND X" << j << ' ' << l << '\n';
        if (std::isfinite(u)) out << " UP BND X" << j << ' ' << u << '\n';
    }
    out << "ENDATA\n";
}

} // namespace hydrovalue::convex
