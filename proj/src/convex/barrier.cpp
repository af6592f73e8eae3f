#include "hydrovalue/convex/barrier.hpp"

#include <cmath>
#include <limits>

namespace hydrovalue::convex {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double BarrierProblem::log_likelihood(const VectorXd& x) const {
    double total = 0.0;
    for (const auto& t : terms) {
        double v = t.offset;
        for (const auto& [i, a] : t.a) v += a * x[i];
        total += t.weight * std::log(v);
    }
    return total;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Evaluation {
    double value = kNaN; // minimized: -loglik - mu * sum log g
    VectorXd grad;
    MatrixXd hess;
};

// Returns NaN outside the domain.
double objective(const BarrierProblem& pb, const VectorXd& x, double mu) {
    double f = 0.0;
    for (const auto& t : pb.terms) {
        double v = t.offset;
        for (const auto& [i, a] : t.a) v += a * x[i];
        if (!(v > 0.0)) return kNaN;
        f -= t.weight * std::log(v);
    }
    for (const auto& c : pb.cones) {
        const double lin = c.q.dot(x) + c.d;
        const double g = lin * lin - (c.P * x).squaredNorm();
        if (!(lin > 0.0) || !(g > 0.0)) return kNaN;
        f -= mu * std::log(g);
    }
    return f;
}

Evaluation evaluate(const BarrierProblem& pb, const VectorXd& x, double mu, bool need_hessian) {
    Evaluation ev;
    ev.value = objective(pb, x, mu);
    ev.grad = VectorXd::Zero(pb.dim);
    if (need_hessian) ev.hess = MatrixXd::Zero(pb.dim, pb.dim);
    for (const auto& t : pb.terms) {
        double v = t.offset;
        for (const auto& [i, a] : t.a) v += a * x[i];
        const double gcoef = -t.weight / v;
        const double hcoef = t.weight / (v * v);
        for (const auto& [i, a] : t.a) {
            ev.grad[i] += gcoef * a;
            if (need_hessian) {
                for (const auto& [k, b] : t.a) ev.hess(i, k) += hcoef * a * b;
            }
        }
    }
    for (const auto& c : pb.cones) {
        const double lin = c.q.dot(x) + c.d;
        const VectorXd Px = c.P * x;
        const double g = lin * lin - Px.squaredNorm();
        const VectorXd dg = 2.0 * lin * c.q - 2.0 * c.P.transpose() * Px;
        ev.grad -= (mu / g) * dg;
        if (need_hessian) {
            const MatrixXd d2g = 2.0 * c.q * c.q.transpose() - 2.0 * c.P.transpose() * c.P;
            ev.hess += mu * (-d2g / g + dg * dg.transpose() / (g * g));
        }
    }
    return ev;
}

} // namespace

BarrierResult solve_log_barrier_mle(const BarrierProblem& pb, const VectorXd& start,
                                    const BarrierOptions& opt) {
    const int n = pb.dim;
    if (start.size() != n) throw ValidationError("barrier: start has wrong dimension");

    // Null-space basis of E and projection of the start onto E x = e.
    VectorXd x = start;
    MatrixXd Z = MatrixXd::Identity(n, n);
    if (pb.E.rows() > 0) {
        Eigen::ColPivHouseholderQR<MatrixXd> qr(pb.E.transpose());
        const auto rank = qr.rank();
        const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, n);
        Z = Q.rightCols(n - rank);
        const VectorXd r = pb.e - pb.E * x;
        x += pb.E.completeOrthogonalDecomposition().solve(r);
        if ((pb.E * x - pb.e).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + pb.e.cwiseAbs().maxCoeff())) {
            throw BarrierError("barrier: equality constraints are inconsistent", x, kNaN);
        }
    }
    if (std::isnan(objective(pb, x, 1.0))) {
        throw BarrierError("barrier: start point is not strictly feasible", x, kNaN);
    }

    double weight_sum = 0.0;
    for (const auto& t : pb.terms) weight_sum += std::abs(t.weight);
    const double nu = 2.0 * static_cast<double>(pb.cones.size());

    BarrierResult res;
    double mu = pb.cones.empty() ? 0.0 : opt.mu_initial;
    for (int outer = 0; outer < opt.max_outer; ++outer) {
        ++res.outer_iterations;
        bool centered = false;
        double kkt = kNaN;
        for (int it = 0; it < opt.max_newton_per_stage; ++it) {
            const Evaluation ev = evaluate(pb, x, mu, true);
            const VectorXd gr = Z.transpose() * ev.grad;
            kkt = gr.norm() / (1.0 + weight_sum);
            MatrixXd Hr = Z.transpose() * ev.hess * Z;
            Eigen::LDLT<MatrixXd> ldlt(Hr);
            VectorXd xi = ldlt.solve(-gr);
            if (ldlt.info() != Eigen::Success || !xi.allFinite() || gr.dot(xi) >= 0.0) {
                Hr.diagonal().array() += 1e-12 * (1.0 + Hr.diagonal().cwiseAbs().maxCoeff());
                xi = Hr.llt().solve(-gr);
            }
            const VectorXd step = Z * xi;
            const double decrement = -gr.dot(xi);
            // The Newton decrement is affine invariant; the gradient norm can stay
            // large near the boundary where the Hessian is badly scaled.
            if (decrement <= 1e-14 * (1.0 + std::abs(ev.value)) || kkt <= 1e-14) {
                centered = true;
                break;
            }

            double t = 1.0;
            const double slope = ev.grad.dot(step);
            double f_new = objective(pb, x + t * step, mu);
            int backtracks = 0;
            while ((std::isnan(f_new) || f_new > ev.value + 0.25 * t * slope) && backtracks < 60) {
                t *= 0.5;
                f_new = objective(pb, x + t * step, mu);
                ++backtracks;
            }
            if (backtracks == 60) {
                // No further decrease representable in floating point.
                centered = kkt <= opt.kkt_tolerance;
                break;
            }
            x += t * step;
            ++res.newton_iterations;
            if (decrement < 1e-18 * (1.0 + std::abs(ev.value)) && kkt <= opt.kkt_tolerance) {
                centered = true;
                break;
            }
        }
        res.kkt_residual = kkt;
        if (!centered && !(kkt <= opt.kkt_tolerance)) {
            throw BarrierError("barrier: Newton centering did not converge (mu = " +
                                   std::to_string(mu) + ", kkt = " + std::to_string(kkt) + ")",
                               x, kkt);
        }
        const double loglik = pb.log_likelihood(x);
        if (mu * nu <= opt.gap_tolerance * std::max(1.0, std::abs(loglik))) break;
        if (outer + 1 == opt.max_outer) {
            throw BarrierError("barrier: outer iteration limit reached", x, kkt);
        }
        mu *= opt.mu_factor;
    }
    res.x = x;
    res.mu = mu;
    res.objective = pb.log_likelihood(x);
    return res;
}

} // namespace hydrovalue::convex
