#include "uavplan/linprog.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace uavplan {

namespace {

constexpr double kEps = 1e-11;

// Runs the simplex iterations on a tableau whose last row is the reduced
// cost row and last column the RHS. Returns false on unboundedness.
bool iterate(Eigen::MatrixXd& tab, std::vector<int>& basis, int n_cols) {
    const int m = static_cast<int>(basis.size());
    const int rhs = n_cols;
    for (int iter = 0; iter < 50000; ++iter) {
        // Bland: first column with negative reduced cost
        int enter = -1;
        for (int j = 0; j < n_cols; ++j) {
            if (tab(m, j) < -kEps) {
                enter = j;
                break;
            }
        }
        if (enter < 0) return true; // optimal

        int leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            const double a = tab(i, enter);
            if (a > kEps) {
                const double ratio = tab(i, rhs) / a;
                if (ratio < best - kEps ||
                    (ratio < best + kEps && (leave < 0 || basis[i] < basis[leave]))) {
                    best = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) return false; // unbounded

        // pivot
        const double piv = tab(leave, enter);
        tab.row(leave) /= piv;
        for (int i = 0; i <= m; ++i) {
            if (i == leave) continue;
            const double f = tab(i, enter);
            if (f != 0.0) tab.row(i) -= f * tab.row(leave);
        }
        basis[leave] = enter;
    }
    return true; // iteration cap; treat current point as the answer
}

} // namespace

LpSolution simplex_solve(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                         const Eigen::VectorXd& b) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());

    // columns: n structural, m slack, up to m artificial
    int n_art = 0;
    for (int i = 0; i < m; ++i)
        if (b(i) < 0) ++n_art;

    const int n_cols = n + m + n_art;
    Eigen::MatrixXd tab = Eigen::MatrixXd::Zero(m + 1, n_cols + 1);
    std::vector<int> basis(m);

    int art = n + m;
    for (int i = 0; i < m; ++i) {
        const double sign = b(i) < 0 ? -1.0 : 1.0;
        tab.block(i, 0, 1, n) = sign * A.row(i);
        tab(i, n + i) = sign; // slack
        tab(i, n_cols) = sign * b(i);
        if (b(i) < 0) {
            tab(i, art) = 1.0;
            basis[i] = art++;
        } else {
            basis[i] = n + i;
        }
    }

    LpSolution sol;
    sol.x = Eigen::VectorXd::Zero(n);

    if (n_art > 0) {
        // phase 1: minimize the artificial sum
        for (int j = n + m; j < n_cols; ++j) tab(m, j) = 1.0;
        for (int i = 0; i < m; ++i)
            if (basis[i] >= n + m) tab.row(m) -= tab.row(i);
        if (!iterate(tab, basis, n_cols)) return sol;
        if (tab(m, n_cols) < -1e-7) return sol; // infeasible (objective = -sum)

        // pivot any artificial still in the basis out, or drop its row
        for (int i = 0; i < m; ++i) {
            if (basis[i] < n + m) continue;
            int enter = -1;
            for (int j = 0; j < n + m; ++j) {
                if (std::abs(tab(i, j)) > 1e-9) {
                    enter = j;
                    break;
                }
            }
            if (enter >= 0) {
                const double piv = tab(i, enter);
                tab.row(i) /= piv;
                for (int r = 0; r <= m; ++r) {
                    if (r == i) continue;
                    const double f = tab(r, enter);
                    if (f != 0.0) tab.row(r) -= f * tab.row(i);
                }
                basis[i] = enter;
            }
        }
    }

    // phase 2 objective
    tab.row(m).setZero();
    tab.block(m, 0, 1, n) = c.transpose();
    for (int j = n + m; j < n_cols; ++j) tab(m, j) = 1e30; // keep artificials out
    for (int i = 0; i < m; ++i) {
        const double cb = tab(m, basis[i]);
        if (cb != 0.0) tab.row(m) -= cb * tab.row(i);
    }
    if (!iterate(tab, basis, n_cols)) {
        sol.feasible = true;
        sol.bounded = false;
        return sol;
    }

    for (int i = 0; i < m; ++i)
        if (basis[i] < n) sol.x(basis[i]) = tab(i, n_cols);
    sol.objective = c.dot(sol.x);
    sol.feasible = true;
    return sol;
}

} // namespace uavplan
