#include "hydrovalue/fourier.hpp"

#include <cmath>
#include <numbers>

namespace hydrovalue {

double FourierBasis::period_days() const { return 2.0 * std::numbers::pi / omega; }

void FourierBasis::eval_into(double t_days, double* out) const {
    out[0] = 1.0;
    for (int k = 1; k <= harmonics; ++k) {
        const double angle = k * omega * t_days;
        out[2 * k - 1] = std::cos(angle);
        out[2 * k] = std::sin(angle);
    }
}

Eigen::VectorXd FourierBasis::eval(double t_days) const {
    Eigen::VectorXd phi(dimension());
    eval_into(t_days, phi.data());
    return phi;
}

Eigen::MatrixXd design_matrix(const FourierBasis& basis, const std::vector<double>& t_days) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(t_days.size()), basis.dimension());
    Eigen::VectorXd row(basis.dimension());
    for (std::size_t i = 0; i < t_days.size(); ++i) {
        basis.eval_into(t_days[i], row.data());
        X.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return X;
}

} // namespace hydrovalue
