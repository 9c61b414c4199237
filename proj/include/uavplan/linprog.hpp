#pragma once

#include <Eigen/Dense>

namespace uavplan {

struct LpSolution {
    Eigen::VectorXd x;
    double objective = 0;
    bool feasible = false;
    bool bounded = true;
};

/// Dense two-phase primal simplex for
///   minimize c'x  subject to  A x <= b,  x >= 0.
/// Bland's rule throughout, so it cannot cycle.
LpSolution simplex_solve(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                         const Eigen::VectorXd& b);

} // namespace uavplan
