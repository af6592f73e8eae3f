#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hydrovalue/fourier.hpp"
#include "hydrovalue/ingest.hpp"

namespace hydrovalue {

/// Periodic quantile curve q(t) = phi(t) . beta.
struct QuantileModel {
    double alpha = 0.5;
    Eigen::VectorXd beta;
    FourierBasis basis;

    double eval(double t_days) const;
};

/// Quantile curves at increasing levels; regime r (1-based) is the interval
/// between levels r-1 and r, with implicit bounds 0 and +inf.
struct QuantileFamily {
    FourierBasis basis;
    std::vector<double> levels;
    std::vector<QuantileModel> models;

    int num_regimes() const { return static_cast<int>(levels.size()) + 1; }
};

/// max(alpha x, (alpha - 1) x)
double pinball_loss(double alpha, double residual);
double total_pinball_loss(const InflowSeries& series, const QuantileModel& model);

/// Minimizes the total pinball loss over beta with a linear program.
QuantileModel fit_quantile(const InflowSeries& series, double alpha, const FourierBasis& basis);

QuantileFamily fit_quantile_family(const InflowSeries& series, const std::vector<double>& levels,
                                   const FourierBasis& basis);

/// Fraction of observations with inflow <= q(t).
double empirical_coverage(const InflowSeries& series, const QuantileModel& model);

/// Quantile values on a time grid, sorted pointwise so curves never cross.
struct QuantileGrid {
    std::vector<double> t_days;
    Eigen::MatrixXd values; // rows: grid points, cols: levels
    int crossings = 0;      // grid points where sorting changed the order
};

QuantileGrid enforce_noncrossing(const QuantileFamily& family, const std::vector<double>& t_days);

/// Week-start times 7*(w-1) for w = 1..52.
std::vector<double> weekly_grid();

} // namespace hydrovalue
