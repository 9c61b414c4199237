#pragma once

#include <string>

#include "uavplan/validation.hpp"

namespace uavplan {

/// Outcome of one comparison scheme on a scenario.
struct BaselineResult {
    std::string scheme;
    DesignVars plan;
    IterationTrace trace;
    double completion_time = 0;          // sum of slot durations, s
    double margin_used = 0;              // AC scheme only, bps/Hz
    int re_optimization_count = 0;       // AC scheme only
    bool converged = false;
    bool feasible_under_mc = false;
    VectorXd estimated_rates;            // rate estimate the scheme used
    McReport mc;                         // final certification
    std::string error;                   // non-empty on cap/solver failure
};

/// Scheme 1: the proposed quadrature-lower-bound design.
BaselineResult run_proposed(const Scenario& sc, const EnvParams& env,
                            const QuadratureGrid& grid,
                            const PenaltyConfig& config, const McConfig& mc);

/// Scheme 2: average-channel design targeting R_min + margin, with the
/// margin grown on the 1e-4 grid until Monte Carlo feasibility (cap 1 bps/Hz).
BaselineResult run_ac_based(const Scenario& sc, const EnvParams& env,
                            const PenaltyConfig& config, const McConfig& mc,
                            double margin_cap = 1.0);

/// Scheme 3: one common slot duration shared by all slots.
BaselineResult run_fixed_slot(const Scenario& sc, const EnvParams& env,
                              const QuadratureGrid& grid,
                              const PenaltyConfig& config, const McConfig& mc);

/// Scheme 4: altitude pinned to h_min (endpoints included).
BaselineResult run_fixed_altitude(const Scenario& sc, const EnvParams& env,
                                  const QuadratureGrid& grid,
                                  const PenaltyConfig& config,
                                  const McConfig& mc);

/// Scheme 5: hover-and-fly path at h_min flown at V_max, trajectory frozen;
/// only the schedule and hover durations are optimized.
BaselineResult run_fixed_trajectory(const Scenario& sc, const EnvParams& env,
                                    const QuadratureGrid& grid,
                                    const PenaltyConfig& config,
                                    const McConfig& mc);

/// Dispatch by tag: proposed | ac | fixed-slot | fixed-alt | fixed-traj.
BaselineResult run_scheme(const std::string& name, const Scenario& sc,
                          const EnvParams& env, const QuadratureGrid& grid,
                          const PenaltyConfig& config, const McConfig& mc);

} // namespace uavplan
