#include "hydrovalue/regime_chain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "hydrovalue/error.hpp"
#include "hydrovalue/log.hpp"

namespace hydrovalue {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<std::size_t> RegimeSeries::counts() const {
    std::vector<std::size_t> n(static_cast<std::size_t>(num_regimes), 0);
    for (const auto& e : entries) ++n[static_cast<std::size_t>(e.regime - 1)];
    return n;
}

RegimeSeries assign_regimes(const InflowSeries& series, const QuantileFamily& family) {
    RegimeSeries out;
    out.num_regimes = family.num_regimes();
    out.entries.reserve(series.size());

    std::vector<double> t(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) t[i] = series[i].t_days;
    const QuantileGrid grid = enforce_noncrossing(family, t);

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& rec = series[i];
        int regime = 1;
        for (Eigen::Index k = 0; k < grid.values.cols(); ++k) {
            if (rec.inflow_mw > grid.values(static_cast<Eigen::Index>(i), k)) regime = static_cast<int>(k) + 2;
        }
        out.entries.push_back({rec.year, rec.week, rec.t_days, rec.inflow_mw, regime});
    }
    return out;
}

double TransitionModel::probability(int from, int to, double t_days) const {
    const auto row = static_cast<Eigen::Index>((from - 1) * num_regimes + (to - 1));
    return basis.eval(t_days).dot(gamma.row(row).transpose());
}

TransitionModel TransitionModel::homogeneous(const MatrixXd& matrix, const FourierBasis& basis) {
    TransitionModel m;
    m.num_regimes = static_cast<int>(matrix.rows());
    m.basis = basis;
    m.gamma = MatrixXd::Zero(matrix.rows() * matrix.rows(), basis.dimension());
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < matrix.cols(); ++c) m.gamma(r * matrix.rows() + c, 0) = matrix(r, c);
    }
    return m;
}

MatrixXd transition_matrix(const TransitionModel& model, double t_days) {
    const int R = model.num_regimes;
    const VectorXd phi = model.basis.eval(t_days);
    MatrixXd P(R, R);
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < R; ++c) P(r, c) = model.gamma.row(r * R + c).dot(phi);
    }
    return P;
}

MatrixXd transition_counts(const RegimeSeries& regimes) {
    const int R = regimes.num_regimes;
    MatrixXd N = MatrixXd::Zero(R, R);
    for (std::size_t i = 1; i < regimes.entries.size(); ++i) {
        N(regimes.entries[i - 1].regime - 1, regimes.entries[i].regime - 1) += 1.0;
    }
    return N;
}

double transition_log_likelihood(const TransitionModel& model, const RegimeSeries& regimes) {
    double ll = 0.0;
    for (std::size_t i = 1; i < regimes.entries.size(); ++i) {
        const auto& a = regimes.entries[i - 1];
        ll += std::log(model.probability(a.regime, regimes.entries[i].regime, a.t_days));
    }
    return ll;
}

namespace {

double homogeneous_ll(const MatrixXd& N) {
    double ll = 0.0;
    for (Eigen::Index r = 0; r < N.rows(); ++r) {
        const double total = N.row(r).sum();
        for (Eigen::Index c = 0; c < N.cols(); ++c) {
            if (N(r, c) > 0.0) ll += N(r, c) * std::log(N(r, c) / total);
        }
    }
    return ll;
}

} // namespace

TransitionFit fit_transition_mle(const RegimeSeries& regimes, const FourierBasis& basis,
                                 const convex::BarrierOptions& options) {
    if (regimes.entries.size() < 2) throw ValidationError("fit_transition_mle: need at least two entries");
    if (basis.harmonics < 1) throw ValidationError("fit_transition_mle: need at least one harmonic");

    const int R = regimes.num_regimes;
    const int D = basis.dimension();
    const double sqrt_m = std::sqrt(static_cast<double>(basis.harmonics));

    TransitionFit fit;
    fit.model.num_regimes = R;
    fit.model.basis = basis;
    fit.model.gamma = MatrixXd::Zero(R * R, D);
    fit.transitions = regimes.entries.size() - 1;

    const MatrixXd N = transition_counts(regimes);
    fit.homogeneous_log_likelihood = homogeneous_ll(N);

    if (R == 1) {
        fit.model.gamma(0, 0) = 1.0;
        fit.log_likelihood = 0.0;
        return fit;
    }

    // Identical (from, to, phase) observations share one weighted log term.
    const double period = basis.period_days();
    std::map<std::tuple<int, int, double>, double> weights;
    for (std::size_t i = 1; i < regimes.entries.size(); ++i) {
        const auto& a = regimes.entries[i - 1];
        const double phase = std::fmod(a.t_days, period);
        weights[{a.regime - 1, regimes.entries[i].regime - 1, phase}] += 1.0;
    }

    for (int r = 0; r < R; ++r) {
        const double row_total = N.row(r).sum();
        if (row_total == 0.0) {
            const std::string msg = "regime " + std::to_string(r + 1) +
                                    " has no outgoing transitions; using a uniform row";
            warn(msg);
            fit.warnings.push_back(msg);
            for (int c = 0; c < R; ++c) fit.model.gamma(r * R + c, 0) = 1.0 / R;
            continue;
        }

        convex::BarrierProblem pb;
        pb.dim = R * D;
        for (auto it = weights.lower_bound({r, 0, -1.0}); it != weights.end() && std::get<0>(it->first) == r; ++it) {
            const auto& [from, to, phase] = it->first;
            (void)from;
            convex::LogTerm term;
            term.weight = it->second;
            const VectorXd phi = basis.eval(phase);
            for (int k = 0; k < D; ++k) {
                if (phi[k] != 0.0) term.a.emplace_back(to * D + k, phi[k]);
            }
            pb.terms.push_back(std::move(term));
        }
        pb.E = MatrixXd::Zero(D, pb.dim);
        pb.e = VectorXd::Zero(D);
        pb.e[0] = 1.0;
        for (int k = 0; k < D; ++k) {
            for (int c = 0; c < R; ++c) pb.E(k, c * D + k) = 1.0;
        }
        for (int c = 0; c < R; ++c) {
            convex::ConeConstraint cone;
            cone.P = MatrixXd::Zero(D - 1, pb.dim);
            for (int k = 1; k < D; ++k) cone.P(k - 1, c * D + k) = sqrt_m;
            cone.q = VectorXd::Zero(pb.dim);
            cone.q[c * D] = 1.0;
            cone.d = 0.0;
            pb.cones.push_back(cone);
            cone.q[c * D] = -1.0;
            cone.d = 1.0;
            pb.cones.push_back(std::move(cone));
        }

        VectorXd start = VectorXd::Zero(pb.dim);
        for (int c = 0; c < R; ++c) start[c * D] = (N(r, c) + 1.0) / (row_total + R);

        const auto res = convex::solve_log_barrier_mle(pb, start, options);
        fit.kkt_residual = std::max(fit.kkt_residual, res.kkt_residual);
        for (int c = 0; c < R; ++c) {
            fit.model.gamma.row(r * R + c) = res.x.segment(c * D, D).transpose();
        }
    }
    fit.log_likelihood = transition_log_likelihood(fit.model, regimes);
    return fit;
}

const HistogramCell& ConditionalInflowDist::cell(int regime, int week) const {
    return cells.at(static_cast<std::size_t>((regime - 1) * kWeeksPerYear + (week - 1)));
}

HistogramCell& ConditionalInflowDist::cell(int regime, int week) {
    return cells.at(static_cast<std::size_t>((regime - 1) * kWeeksPerYear + (week - 1)));
}

double bin_center(double inflow_mw, double bin_mw) {
    return bin_mw * std::floor(inflow_mw / bin_mw + 0.5);
}

ConditionalInflowDist fit_conditional_hist(const RegimeSeries& regimes, double bin_mw, int pool_weeks) {
    if (!(bin_mw > 0.0)) throw ValidationError("histogram bin width must be positive");
    if (pool_weeks < 0) throw ValidationError("pool_weeks must be nonnegative");

    const int R = regimes.num_regimes;
    ConditionalInflowDist dist;
    dist.num_regimes = R;
    dist.bin_mw = bin_mw;
    dist.pool_weeks = pool_weeks;
    dist.cells.resize(static_cast<std::size_t>(R * kWeeksPerYear));

    // Binned observations per (regime, week): center -> count.
    std::vector<std::map<double, std::size_t>> raw(dist.cells.size());
    for (const auto& e : regimes.entries) {
        const auto idx = static_cast<std::size_t>((e.regime - 1) * kWeeksPerYear + (e.week - 1));
        ++raw[idx][bin_center(e.inflow_mw, bin_mw)];
    }

    for (int r = 1; r <= R; ++r) {
        const auto base = static_cast<std::size_t>((r - 1) * kWeeksPerYear);
        bool observed = false;
        for (int w = 0; w < kWeeksPerYear; ++w) observed = observed || !raw[base + static_cast<std::size_t>(w)].empty();
        if (!observed) {
            throw ValidationError("regime " + std::to_string(r) + " is never observed; cannot build its inflow histogram");
        }
        for (int w = 1; w <= kWeeksPerYear; ++w) {
            HistogramCell& cell = dist.cell(r, w);
            for (const auto& [center, n] : raw[base + static_cast<std::size_t>(w - 1)]) cell.own_count += n;

            int window = pool_weeks;
            std::map<double, std::size_t> pooled;
            while (true) {
                pooled.clear();
                const int span = std::min(window, kWeeksPerYear / 2);
                for (int dw = -span; dw <= span; ++dw) {
                    // Both ends of an even-length circle coincide at span 26.
                    if (2 * span == kWeeksPerYear && dw == span) continue;
                    const int ww = ((w - 1 + dw) % kWeeksPerYear + kWeeksPerYear) % kWeeksPerYear;
                    for (const auto& [center, n] : raw[base + static_cast<std::size_t>(ww)]) pooled[center] += n;
                }
                if (!pooled.empty()) break;
                window = std::max(1, 2 * window);
            }
            if (window != pool_weeks) {
                warn("histogram cell (regime " + std::to_string(r) + ", week " + std::to_string(w) +
                     ") is empty; pooling widened to +/-" + std::to_string(window) + " weeks");
            }
            cell.window = window;
            std::size_t total = 0;
            for (const auto& [center, n] : pooled) total += n;
            for (const auto& [center, n] : pooled) {
                cell.support.push_back(center);
                cell.counts.push_back(n);
                cell.probs.push_back(static_cast<double>(n) / static_cast<double>(total));
            }
        }
    }
    return dist;
}

double sample_inflow(const ConditionalInflowDist& dist, int regime, int week, std::mt19937_64& rng) {
    if (regime < 1 || regime > dist.num_regimes || week < 1 || week > kWeeksPerYear) {
        throw ValidationError("sample_inflow: cell out of range");
    }
    const HistogramCell& cell = dist.cell(regime, week);
    if (cell.support.empty()) throw ValidationError("sample_inflow: unpopulated cell");
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cell.probs.size(); ++i) {
        acc += cell.probs[i];
        if (u < acc) return cell.support[i];
    }
    return cell.support.back();
}

} // namespace hydrovalue
