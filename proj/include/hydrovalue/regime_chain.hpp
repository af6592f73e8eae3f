#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hydrovalue/convex/barrier.hpp"
#include "hydrovalue/fourier.hpp"
#include "hydrovalue/ingest.hpp"
#include "hydrovalue/quantile_fit.hpp"

namespace hydrovalue {

// Regimes are numbered 1..|R| in every public interface.

struct RegimeEntry {
    int year = 0;
    int week = 0;
    double t_days = 0.0;
    double inflow_mw = 0.0;
    int regime = 0;
};

struct RegimeSeries {
    int num_regimes = 1;
    std::vector<RegimeEntry> entries;

    /// Number of entries per regime, index 0 for regime 1.
    std::vector<std::size_t> counts() const;
};

/// Regime r holds q_{r-1}(t) < f <= q_r(t) with q_0 = 0 and q_|R| = +inf.
/// Quantiles are evaluated at each record's time and sorted pointwise.
RegimeSeries assign_regimes(const InflowSeries& series, const QuantileFamily& family);

/// p(r' | r, t) = phi(t) . gamma_{r r'}.
struct TransitionModel {
    int num_regimes = 1;
    FourierBasis basis{kAnnualOmega, 1};
    /// Row (r-1)*|R| + (r'-1) holds the coefficients of pair (r, r').
    Eigen::MatrixXd gamma;

    double probability(int from, int to, double t_days) const;
    static TransitionModel homogeneous(const Eigen::MatrixXd& matrix, const FourierBasis& basis);
};

/// Row-stochastic |R| x |R| matrix, 0-based.
Eigen::MatrixXd transition_matrix(const TransitionModel& model, double t_days);

struct TransitionFit {
    TransitionModel model;
    double log_likelihood = 0.0;
    /// Log-likelihood of the empirical time-homogeneous matrix.
    double homogeneous_log_likelihood = 0.0;
    double kkt_residual = 0.0;
    std::size_t transitions = 0;
    std::vector<std::string> warnings;
};

/// Constrained MLE of the transition coefficients. Rows decouple, so each
/// regime's row is a separate barrier problem: normalization equalities plus
/// ||sqrt(M) gamma_h|| <= gamma_0 and ||sqrt(M) gamma_h|| <= 1 - gamma_0 per pair.
TransitionFit fit_transition_mle(const RegimeSeries& regimes, const FourierBasis& basis,
                                 const convex::BarrierOptions& options = {});

/// Sum of log p over consecutive pairs of the series.
double transition_log_likelihood(const TransitionModel& model, const RegimeSeries& regimes);

/// Empirical matrix of transition counts, 0-based.
Eigen::MatrixXd transition_counts(const RegimeSeries& regimes);

struct HistogramCell {
    std::vector<double> support; // bin centers, ascending
    std::vector<double> probs;
    std::vector<std::size_t> counts;
    std::size_t own_count = 0;  // observations of this exact week, before pooling
    int window = 0;             // half-width in weeks actually pooled
};

/// Inflow histograms per (regime, week of year).
struct ConditionalInflowDist {
    int num_regimes = 1;
    double bin_mw = 100.0;
    int pool_weeks = 0;
    std::vector<HistogramCell> cells; // index (r-1)*52 + (week-1)

    const HistogramCell& cell(int regime, int week) const;
    HistogramCell& cell(int regime, int week);
};

/// Center of the bin containing f: bin * floor(f / bin + 1/2).
double bin_center(double inflow_mw, double bin_mw);

ConditionalInflowDist fit_conditional_hist(const RegimeSeries& regimes, double bin_mw, int pool_weeks);

double sample_inflow(const ConditionalInflowDist& dist, int regime, int week, std::mt19937_64& rng);

} // namespace hydrovalue
