#pragma once

#include <Eigen/Dense>

#include <string>

namespace attfdir {

/// Innovation of one measurement against a filter prediction.
struct InnovationRecord {
    double t = 0.0;
    Eigen::VectorXd nu;  ///< y − ŷ (control feed-through is identically zero)
    Eigen::MatrixXd S;   ///< innovation covariance
    double nis = 0.0;    ///< νᵀ S⁻¹ ν
    std::string source;  ///< "ekf", "ukf", "pf"
    bool degenerate = false; ///< PF weights collapsed and were reset
};

/// νᵀ S⁻¹ ν via a Cholesky solve. Throws NumericalError when S is not
/// symmetric positive definite.
[[nodiscard]] double compute_nis(const Eigen::VectorXd& nu, const Eigen::MatrixXd& S);

} // namespace attfdir
