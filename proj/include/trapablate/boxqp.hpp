#pragma once

#include <Eigen/Dense>

namespace trapablate {

struct BoxQpOptions {
    double tolerance = 1e-10; // on the projected-gradient norm
    int max_iterations = 1000;
};

struct BoxQpResult {
    Eigen::VectorXd x;
    double projected_gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Projected gradient of 1/2 x'Hx + g'x at x for the box [lower, upper]:
/// components pushing against an active bound are dropped.
Eigen::VectorXd projected_gradient(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                   const Eigen::VectorXd& x);

/// Primal active-set method for min 1/2 x'Hx + g'x s.t. lower <= x <= upper.
/// H must be symmetric positive definite. `x0` seeds the working set and is
/// clamped into the box first.
BoxQpResult solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::VectorXd& lower,
                         const Eigen::VectorXd& upper, const Eigen::VectorXd& x0,
                         const BoxQpOptions& options = {});

} // namespace trapablate
