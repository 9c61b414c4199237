#include "uavplan/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uavplan/core_model.hpp"

namespace uavplan {

void PenaltyConfig::validate() const {
    if (eta0 <= 0 || eta_max < eta0 || growth <= 1.0 || conv_tol <= 0 ||
        max_outer < 1)
        throw std::invalid_argument("PenaltyConfig: invalid parameters");
}

namespace {

// keeps linearization anchors strictly below the true elevation angle so the
// angle constraint always has interior room
constexpr double kAngleBackoff = 1.0 - 1e-6;
// near 90 deg the sine tangent is flat; cap the anchor to keep strict margin
constexpr double kAngleCap = 89.99;

void refresh_multipliers(ScaState& state, const Scenario& sc,
                         const VectorXd& slots, const SnrGrids& snr,
                         const EnvParams& env) {
    state.delta_prev = slots;
    for (int k = 0; k < sc.num_gns(); ++k) {
        for (int n = 1; n <= sc.n_slots; ++n) {
            const Vector3d& q = state.q_prev[n];
            state.lambda(k, n - 1) = update_lambda(q, sc.gns[k]);
            state.mu(k, n - 1) = update_mu(
                slots(n - 1),
                r_hat(q, sc.gns[k], state.theta_lb_prev(k, n - 1), snr, env));
        }
    }
}

void refresh_anchors(ScaState& state, const Scenario& sc,
                     const SubproblemSolution& sol) {
    state.q_prev = sol.trajectory;
    // re-linearize at the actual geometry: the tightest valid angle anchor is
    // the true elevation angle, backed off to keep the sine constraint strict
    for (int k = 0; k < sc.num_gns(); ++k)
        for (int n = 1; n <= sc.n_slots; ++n)
            state.theta_lb_prev(k, n - 1) = std::min(
                elevation_angle(sol.trajectory[n], sc.gns[k]) * kAngleBackoff,
                kAngleCap);
}

MatrixXd per_slot_se(const Scenario& sc, const std::vector<Vector3d>& traj,
                     const SnrGrids& snr, const EnvParams& env) {
    MatrixXd se(sc.num_gns(), sc.n_slots);
    for (int k = 0; k < sc.num_gns(); ++k)
        for (int n = 1; n <= sc.n_slots; ++n)
            se(k, n - 1) = se_lower_bound(traj[n], sc.gns[k], snr, env).se_total;
    return se;
}

double rounded_slack(const MatrixXd& schedule, const VectorXd& slots,
                     const MatrixXd& se, const EnvParams& env) {
    const double total = slots.sum();
    double worst = 0;
    for (int k = 0; k < schedule.rows(); ++k) {
        double rate = 0;
        for (int n = 0; n < schedule.cols(); ++n)
            rate += schedule(k, n) * slots(n) * se(k, n) / total;
        worst = std::max(worst, env.r_min - rate);
    }
    return worst;
}

} // namespace

DesignVars hover_and_fly_plan(const Scenario& sc, double h_hover,
                              bool legs_at_v_max) {
    sc.validate();
    const int k_gns = sc.num_gns();
    const int n_slots = sc.n_slots;

    // nearest-neighbor tour over the hover points
    std::vector<Vector3d> hover(k_gns);
    for (int k = 0; k < k_gns; ++k)
        hover[k] = Vector3d{sc.gns[k].x(), sc.gns[k].y(), h_hover};
    std::vector<int> order;
    std::vector<bool> used(k_gns, false);
    Vector3d cur = sc.q_start;
    for (int step = 0; step < k_gns; ++step) {
        int best = -1;
        double best_d = 0;
        for (int k = 0; k < k_gns; ++k) {
            if (used[k]) continue;
            const double d = (hover[k] - cur).norm();
            if (best < 0 || d < best_d) {
                best = k;
                best_d = d;
            }
        }
        order.push_back(best);
        used[best] = true;
        cur = hover[best];
    }

    std::vector<Vector3d> route;
    route.push_back(sc.q_start);
    for (int k : order) route.push_back(hover[k]);
    route.push_back(sc.q_end);

    const int n_legs = static_cast<int>(route.size()) - 1;
    std::vector<int> leg_slots(n_legs, 0);
    std::vector<double> leg_delta(n_legs, sc.delta_max);
    int travel_total = 0;
    for (int i = 0; i < n_legs; ++i) {
        const Vector3d d = route[i + 1] - route[i];
        const double need =
            std::max(d.norm() / sc.v_max, std::abs(d.z()) / sc.v_z);
        leg_slots[i] = static_cast<int>(std::ceil(need / sc.delta_max - 1e-12));
        if (legs_at_v_max && leg_slots[i] > 0)
            leg_delta[i] = std::max(need / leg_slots[i], sc.delta_min);
        travel_total += leg_slots[i];
    }
    if (travel_total > n_slots)
        throw InfeasibleError(
            "hover_and_fly_plan: mission endpoints unreachable within N slots "
            "at delta_max and v_max");

    const int hover_total = n_slots - travel_total;
    std::vector<int> hover_slots(k_gns, hover_total / k_gns);
    for (int i = 0; i < hover_total % k_gns; ++i) ++hover_slots[order[i]];

    DesignVars plan;
    plan.schedule = MatrixXd::Zero(k_gns, n_slots);
    plan.slots = VectorXd::Constant(n_slots, sc.delta_max);
    plan.trajectory.clear();
    plan.trajectory.push_back(sc.q_start);
    int slot = 0;
    for (int i = 0; i < n_legs; ++i) {
        for (int j = 1; j <= leg_slots[i]; ++j) {
            plan.trajectory.push_back(
                route[i] + (route[i + 1] - route[i]) *
                               (static_cast<double>(j) / leg_slots[i]));
            plan.slots(slot) = leg_delta[i];
            ++slot;
        }
        if (i < n_legs - 1) {
            const int k = order[i];
            for (int j = 0; j < hover_slots[k]; ++j) {
                plan.trajectory.push_back(route[i + 1]);
                plan.schedule(k, slot) = 1.0;
                ++slot;
            }
        }
    }

    const ViolationReport rep = validate_design(sc, plan);
    if (!rep.empty())
        throw SolverError(
            "hover_and_fly_plan: constructed plan violates constraints: " +
            rep.describe());
    return plan;
}

ScaState make_initial_state(const DesignVars& plan, const Scenario& sc,
                            const EnvParams& env, const QuadratureGrid& grid) {
    const int k_gns = sc.num_gns();
    const int n_slots = sc.n_slots;
    ScaState state;
    state.q_prev = plan.trajectory;
    state.theta_lb_prev.resize(k_gns, n_slots);
    state.lambda.resize(k_gns, n_slots);
    state.mu.resize(k_gns, n_slots);
    state.x_sym = env.a1 + std::log(env.a1) / env.a2;
    for (int k = 0; k < k_gns; ++k)
        for (int n = 1; n <= n_slots; ++n)
            state.theta_lb_prev(k, n - 1) = std::min(
                elevation_angle(plan.trajectory[n], sc.gns[k]) * kAngleBackoff,
                kAngleCap);
    const SnrGrids snr(grid, env);
    refresh_multipliers(state, sc, plan.slots, snr, env);
    return state;
}

std::pair<DesignVars, ScaState> initialize(const Scenario& sc,
                                           const EnvParams& env,
                                           const QuadratureGrid& grid) {
    env.validate();
    DesignVars plan =
        hover_and_fly_plan(sc, std::clamp(100.0, sc.h_min, sc.h_max));
    ScaState state = make_initial_state(plan, sc, env, grid);
    return {std::move(plan), std::move(state)};
}

OptimizeResult run_algorithm1(const Scenario& sc, const EnvParams& env,
                              const QuadratureGrid& grid,
                              const PenaltyConfig& config,
                              const TrajectoryOptions& opts) {
    env.validate();
    return run_algorithm1(
        sc, env, grid, config, opts,
        hover_and_fly_plan(sc, std::clamp(100.0, sc.h_min, sc.h_max)));
}

OptimizeResult run_algorithm1(const Scenario& sc, const EnvParams& env,
                              const QuadratureGrid& grid,
                              const PenaltyConfig& config,
                              const TrajectoryOptions& opts,
                              const DesignVars& initial) {
    config.validate();
    env.validate();
    DesignVars plan = initial;
    ScaState state = make_initial_state(plan, sc, env, grid);
    const SnrGrids snr(grid, env);
    state.eta = config.eta0;

    OptimizeResult out;
    double t_old = plan.total_time();
    for (int iter = 1; iter <= config.max_outer; ++iter) {
        const MatrixXd se = per_slot_se(sc, plan.trajectory, snr, env);
        const double keep_slack =
            rounded_slack(plan.schedule, plan.slots, se, env);
        const SchedulingResult sp1 =
            solve_scheduling_lp(se, plan.slots, env, state.eta);
        const MatrixXd cand = round_schedule(sp1.schedule);
        const double cand_slack = rounded_slack(cand, plan.slots, se, env);
        // adopt the re-rounded schedule only on strict improvement; LP ties
        // otherwise churn the schedule and destroy the SCA anchors
        bool rounding_hurt = false;
        if (cand_slack < keep_slack - 1e-9) {
            plan.schedule = cand;
            rounding_hurt = cand_slack > sp1.slack + 1e-6;
        }

        refresh_multipliers(state, sc, plan.slots, snr, env);
        SubproblemSolution sol =
            solve_trajectory_subproblem(sc, env, plan.schedule, state, grid, opts);
        if (rounding_hurt) {
            refresh_anchors(state, sc, sol);
            refresh_multipliers(state, sc, sol.slots, snr, env);
            sol = solve_trajectory_subproblem(sc, env, plan.schedule, state,
                                              grid, opts);
        }
        // inner SCA refinement: re-anchor and re-solve until the penalized
        // objective stalls, so one outer iteration reaches the fixed point
        for (int inner = 0; inner < 25; ++inner) {
            refresh_anchors(state, sc, sol);
            refresh_multipliers(state, sc, sol.slots, snr, env);
            SubproblemSolution next = solve_trajectory_subproblem(
                sc, env, plan.schedule, state, grid, opts);
            const double gain = sol.objective - next.objective;
            sol = std::move(next);
            if (gain < 0.3 * config.conv_tol) break;
        }

        plan.trajectory = sol.trajectory;
        plan.slots = sol.slots;
        refresh_anchors(state, sc, sol);

        const double t_new = plan.total_time();
        IterationRecord rec;
        rec.iteration = iter;
        rec.t = t_new;
        rec.objective = t_new + state.eta * sol.slack;
        rec.slack = sol.slack;
        rec.eta = state.eta;
        rec.rates =
            achieved_rate(plan, per_slot_se(sc, plan.trajectory, snr, env));
        out.trace.push_back(std::move(rec));

        const bool slack_ok = sol.slack <= 1e-6 * t_new;
        if (std::abs(t_new - t_old) < config.conv_tol && slack_ok) {
            out.converged = true;
            out.rate_feasible = true;
            break;
        }
        t_old = t_new;
        state.eta = std::min(config.growth * state.eta, config.eta_max);
    }
    if (!out.converged && !out.trace.empty())
        out.rate_feasible = out.trace.back().slack <= 1e-6 * out.trace.back().t;
    out.plan = std::move(plan);
    return out;
}

} // namespace uavplan
