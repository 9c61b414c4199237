#pragma once

#include "uavplan/sca.hpp"

namespace uavplan {

struct PenaltyConfig {
    double eta0 = 1.0;
    double eta_max = 1e5;
    double growth = 1.5;
    double conv_tol = 1e-3; // seconds
    int max_outer = 100;

    void validate() const;
};

struct IterationRecord {
    int iteration = 0;
    double t = 0;         // completion time, s
    double objective = 0; // t + eta * slack
    double slack = 0;     // time-scaled rho
    double eta = 0;
    VectorXd rates; // per-GN lower-bound rates, bps/Hz
};

using IterationTrace = std::vector<IterationRecord>;

struct OptimizeResult {
    DesignVars plan;
    IterationTrace trace;
    bool converged = false;
    bool rate_feasible = false; // final slack <= 1e-6 * T
};

/// Hover-and-fly plan at the given hover altitude: nearest-neighbor GN tour
/// from q_start, straight legs, hover slots split evenly across GNs. With
/// legs_at_v_max the travel slots are shortened to fly each leg at V_max;
/// otherwise every slot gets delta_max.
DesignVars hover_and_fly_plan(const Scenario& sc, double h_hover,
                              bool legs_at_v_max = false);

/// SCA anchors and multipliers evaluated at a concrete plan.
ScaState make_initial_state(const DesignVars& plan, const Scenario& sc,
                            const EnvParams& env, const QuadratureGrid& grid);

/// Hover-and-fly initial plan at altitude clamp(100 m, [h_min, h_max]) with
/// its matching SCA state.
std::pair<DesignVars, ScaState> initialize(const Scenario& sc,
                                           const EnvParams& env,
                                           const QuadratureGrid& grid);

/// Penalty block-coordinate descent alternating the scheduling LP and the
/// trajectory subproblem under the geometric penalty schedule.
OptimizeResult run_algorithm1(const Scenario& sc, const EnvParams& env,
                              const QuadratureGrid& grid,
                              const PenaltyConfig& config = {},
                              const TrajectoryOptions& opts = {});

/// Same, starting from a caller-supplied plan (used by the baseline schemes).
OptimizeResult run_algorithm1(const Scenario& sc, const EnvParams& env,
                              const QuadratureGrid& grid,
                              const PenaltyConfig& config,
                              const TrajectoryOptions& opts,
                              const DesignVars& initial);

} // namespace uavplan
