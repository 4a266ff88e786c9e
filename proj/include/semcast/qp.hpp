#pragma once

#include <Eigen/Dense>

namespace semcast {

/// Outcome of one strictly convex inequality-constrained QP
///
///     minimize    0.5 x' H x + g' x
///     subject to  A x + b >= 0   (row-wise)
///
/// solved by a dual active-set method (Goldfarb-Idnani). H must be symmetric
/// positive definite. `multipliers` holds one entry per constraint row,
/// zero for rows inactive at the solution.
struct QpResult {
    Eigen::VectorXd x;
    Eigen::VectorXd multipliers;
    double objective = 0.0;
    bool feasible = false;
    int active_count = 0;
};

QpResult solve_qp(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& gradient,
                  const Eigen::MatrixXd& constraint_normals, const Eigen::VectorXd& constraint_offsets);

}  // namespace semcast
