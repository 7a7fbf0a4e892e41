#include "trapablate/boxqp.hpp"

#include "trapablate/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace trapablate {
namespace {

enum class Bound { Free, Lower, Upper };

} // namespace

Eigen::VectorXd projected_gradient(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                   const Eigen::VectorXd& x) {
    Eigen::VectorXd grad = H * x + g;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] <= lower[i] && grad[i] > 0.0) {
            grad[i] = 0.0;
        } else if (x[i] >= upper[i] && grad[i] < 0.0) {
            grad[i] = 0.0;
        }
    }
    return grad;
}

BoxQpResult solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::VectorXd& lower,
                         const Eigen::VectorXd& upper, const Eigen::VectorXd& x0,
                         const BoxQpOptions& options) {
    const Eigen::Index n = g.size();
    if (H.rows() != n || H.cols() != n || lower.size() != n || upper.size() != n || x0.size() != n) {
        throw DomainError("box QP dimension mismatch");
    }
    if ((lower.array() > upper.array()).any()) {
        throw DomainError("box QP lower bound exceeds upper bound");
    }

    BoxQpResult result;
    result.x = x0.cwiseMax(lower).cwiseMin(upper);
    Eigen::VectorXd& x = result.x;

    std::vector<Bound> state(static_cast<std::size_t>(n), Bound::Free);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (x[i] <= lower[i]) {
            state[static_cast<std::size_t>(i)] = Bound::Lower;
        } else if (x[i] >= upper[i]) {
            state[static_cast<std::size_t>(i)] = Bound::Upper;
        }
    }

    for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
        const Eigen::VectorXd grad = H * x + g;
        result.projected_gradient_norm = projected_gradient(H, g, lower, upper, x).norm();
        if (result.projected_gradient_norm < options.tolerance) {
            result.converged = true;
            return result;
        }

        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (state[static_cast<std::size_t>(i)] == Bound::Free) {
                free.push_back(i);
            }
        }
        double free_norm2 = 0.0;
        for (const auto i : free) {
            free_norm2 += grad[i] * grad[i];
        }

        if (std::sqrt(free_norm2) >= 0.5 * options.tolerance && !free.empty()) {
            // Newton step on the free subspace, then a ratio test against the box.
            const auto m = static_cast<Eigen::Index>(free.size());
            Eigen::MatrixXd Hff(m, m);
            Eigen::VectorXd rhs(m);
            for (Eigen::Index a = 0; a < m; ++a) {
                rhs[a] = -grad[free[static_cast<std::size_t>(a)]];
                for (Eigen::Index b = 0; b < m; ++b) {
                    Hff(a, b) = H(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
                }
            }
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(Hff);
            if (ldlt.info() != Eigen::Success) {
                throw SolverFailure("box QP: free-subspace factorisation failed");
            }
            Eigen::VectorXd step = ldlt.solve(rhs);
            step += ldlt.solve(rhs - Hff * step);

            double alpha = 1.0;
            Eigen::Index blocking = -1;
            Bound blocking_side = Bound::Free;
            for (Eigen::Index a = 0; a < m; ++a) {
                const Eigen::Index i = free[static_cast<std::size_t>(a)];
                if (step[a] < 0.0) {
                    const double t = (lower[i] - x[i]) / step[a];
                    if (t < alpha) {
                        alpha = t;
                        blocking = i;
                        blocking_side = Bound::Lower;
                    }
                } else if (step[a] > 0.0) {
                    const double t = (upper[i] - x[i]) / step[a];
                    if (t < alpha) {
                        alpha = t;
                        blocking = i;
                        blocking_side = Bound::Upper;
                    }
                }
            }
            alpha = std::max(alpha, 0.0);
            for (Eigen::Index a = 0; a < m; ++a) {
                const Eigen::Index i = free[static_cast<std::size_t>(a)];
                x[i] = std::clamp(x[i] + alpha * step[a], lower[i], upper[i]);
            }
            if (blocking >= 0) {
                x[blocking] = blocking_side == Bound::Lower ? lower[blocking] : upper[blocking];
                state[static_cast<std::size_t>(blocking)] = blocking_side;
            }
            continue;
        }

        // Free subspace is stationary: release the bound whose multiplier has
        // the wrong sign by the largest amount.
        Eigen::Index release = -1;
        double worst = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (lower[i] == upper[i]) {
                continue;
            }
            const auto s = state[static_cast<std::size_t>(i)];
            const double violation = s == Bound::Lower ? -grad[i] : (s == Bound::Upper ? grad[i] : 0.0);
            if (violation > worst) {
                worst = violation;
                release = i;
            }
        }
        if (release < 0) {
            // Only round-off remains; nothing left to change.
            result.converged = result.projected_gradient_norm < options.tolerance;
            return result;
        }
        state[static_cast<std::size_t>(release)] = Bound::Free;
    }
    result.projected_gradient_norm = projected_gradient(H, g, lower, upper, x).norm();
    result.converged = result.projected_gradient_norm < options.tolerance;
    return result;
}

} // namespace trapablate
