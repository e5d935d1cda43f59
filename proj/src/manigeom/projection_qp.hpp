#pragma once

#include <optional>

#include <Eigen/Dense>

namespace mg {

struct ProjectionSolution {
    Eigen::VectorXd v_star;
    // Convex-hull point supporting the active constraints, scaled to a unit
    // last (centre) coordinate. Empty when t is already feasible.
    std::optional<Eigen::VectorXd> anchor;
    double slack_norm = 0.0;      // |v_star - t|^2
    Eigen::VectorXd multipliers;  // one per manifold point, >= 0
    double kkt_residual = 0.0;
    int iterations = 0;
};

// Projects t onto {v : v . s >= kappa for every row s of `points`}.
// Dual active-set method (Goldfarb-Idnani) with the identity Hessian.
ProjectionSolution solve_projection_qp(const Eigen::VectorXd& t, const Eigen::MatrixXd& points, double kappa,
                                       int max_iter = 10000);

} // namespace mg
