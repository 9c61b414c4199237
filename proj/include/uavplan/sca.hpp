#pragma once

#include "uavplan/expected_se.hpp"

namespace uavplan {

/// Per-iteration linearization anchors and quadratic-transform multipliers.
struct ScaState {
    std::vector<Vector3d> q_prev; // N+1 waypoints
    MatrixXd theta_lb_prev;       // K x N, degrees
    MatrixXd lambda;              // K x N
    MatrixXd mu;                  // K x N
    VectorXd delta_prev;          // N, warm-start slot durations (may be empty)
    double eta = 1.0;             // penalty weight
    double x_sym = 0.0;           // sigmoid symmetry point, a1 + ln(a1)/a2
};

/// First-order coefficients of the rate bound at the current anchors.
/// psi/chi are stored per quantile point ((k, n) major, grid point minor);
/// the aggregate sums that enter the linearized bound are kept alongside.
struct ScaCoefficients {
    int n_gns = 0, n_slots = 0;
    std::vector<double> psi_los, chi_los;   // K*N*U_L
    std::vector<double> psi_nlos, chi_nlos; // K*N*U_N*U_nu
    MatrixXd x_los_prev, x_nlos_prev;       // K x N, values of X^L, X^N
    MatrixXd y_prev;                        // K x N, squared distances
    MatrixXd r_hat_prev;                    // K x N, bps/Hz
    MatrixXd psi_los_sum;  // (1/U_L) sum_u psi^L
    MatrixXd psi_nlos_sum; // (1/(U_N U_nu)) sum_{i,j} psi^N
    MatrixXd chi_sum;      // both chi families, grid-averaged
};

struct SchedulingResult {
    MatrixXd schedule; // relaxed, K x N in [0, 1]
    double slack = 0;  // rho, bps/Hz
};

/// Restrictions applied by the baseline schemes.
struct TrajectoryOptions {
    bool common_slot = false;       // one shared slot duration
    bool fix_altitude = false;      // pin interior z to h_min
    bool freeze_trajectory = false; // Q fixed at the anchor; travel slots pinned
};

struct SubproblemSolution {
    std::vector<Vector3d> trajectory; // N+1
    VectorXd slots;                   // N
    MatrixXd theta_lb;                // K x N (anchor value where unscheduled)
    double slack = 0;                 // rho_tilde, time-scaled (bps/Hz * s)
    double objective = 0;             // T + eta * rho_tilde
    double kkt_residual = 0;
};

/// SP1: schedule LP at fixed trajectory and slot durations. rates holds the
/// per-slot lower-bound SE at the current trajectory.
SchedulingResult solve_scheduling_lp(const MatrixXd& rates, const VectorXd& slots,
                                     const EnvParams& env, double eta);

/// argmax rounding with 0.5 activation and lowest-index tie-break.
MatrixXd round_schedule(const MatrixXd& relaxed);

/// Closed-form quadratic-transform multiplier sqrt(q.z) / |q - w|.
double update_lambda(const Vector3d& q, const Vector3d& w);

/// Closed-form quadratic-transform multiplier delta * sqrt(r_lb).
double update_mu(double delta, double r_lb);

/// NLoS weight 1 - P^L written as the mirrored sigmoid about x_sym.
double symmetric_nlos_sigmoid(double theta_lb, const EnvParams& env);

/// Pre-linearization conservative rate bound r-hat at (q, theta_lb): the
/// quadrature SE terms weighted by the sigmoids of the angle bound.
double r_hat(const Vector3d& q, const Vector3d& w, double theta_lb,
             const SnrGrids& snr, const EnvParams& env);

ScaCoefficients compute_sca_coefficients(const std::vector<Vector3d>& q_prev,
                                         const MatrixXd& theta_lb_prev,
                                         const QuadratureGrid& grid,
                                         const EnvParams& env,
                                         const std::vector<Vector3d>& gns);

/// Linearized concave lower bound on r-hat; equals r_hat_prev at the anchor
/// and may go negative away from it.
double r_hat_lb(const Vector3d& q, const Vector3d& w, double theta_lb,
                const ScaCoefficients& coeffs, int k, int n,
                const EnvParams& env, double x_sym);

/// SP2-1: trajectory / slot-duration convex program, solved by a log-barrier
/// interior method. schedule must be binary and valid; anchors come from
/// state.
SubproblemSolution solve_trajectory_subproblem(const Scenario& sc,
                                               const EnvParams& env,
                                               const MatrixXd& schedule,
                                               const ScaState& state,
                                               const QuadratureGrid& grid,
                                               const TrajectoryOptions& opts = {});

} // namespace uavplan
