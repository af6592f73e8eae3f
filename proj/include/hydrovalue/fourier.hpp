#pragma once

#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace hydrovalue {

/// Annual angular frequency in rad/day.
inline constexpr double kAnnualOmega = 2.0 * std::numbers::pi / 365.25;

/// Trigonometric basis [1, cos(wt), sin(wt), ..., cos(Mwt), sin(Mwt)].
struct FourierBasis {
    double omega = kAnnualOmega;
    int harmonics = 2;

    int dimension() const { return 1 + 2 * harmonics; }
    double period_days() const;

    Eigen::VectorXd eval(double t_days) const;
    void eval_into(double t_days, double* out) const;
};

/// Design matrix with one row per time point.
Eigen::MatrixXd design_matrix(const FourierBasis& basis, const std::vector<double>& t_days);

} // namespace hydrovalue
