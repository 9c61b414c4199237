#include "uavplan/baselines.hpp"

#include <cmath>

namespace uavplan {

namespace {

BaselineResult certify(std::string scheme, const Scenario& sc,
                       const EnvParams& env, const QuadratureGrid& grid,
                       OptimizeResult res, const McConfig& mc) {
    BaselineResult out;
    out.scheme = std::move(scheme);
    out.trace = std::move(res.trace);
    out.completion_time = res.plan.total_time();
    out.converged = res.converged;
    out.mc = monte_carlo_validate(res.plan, sc, env, grid, mc.n_realizations,
                                  mc.seed);
    out.estimated_rates = out.mc.estimated;
    out.feasible_under_mc = out.mc.all_feasible();
    out.plan = std::move(res.plan);
    return out;
}

} // namespace

BaselineResult run_proposed(const Scenario& sc, const EnvParams& env,
                            const QuadratureGrid& grid,
                            const PenaltyConfig& config, const McConfig& mc) {
    return certify("proposed", sc, env, grid,
                   run_algorithm1(sc, env, grid, config), mc);
}

BaselineResult run_ac_based(const Scenario& sc, const EnvParams& env,
                            const PenaltyConfig& config, const McConfig& mc,
                            double margin_cap) {
    const QuadratureGrid ac = QuadratureGrid::average_channel();
    double margin = 0;
    int count = 0;
    while (true) {
        EnvParams e2 = env;
        e2.r_min = env.r_min + margin;
        BaselineResult out =
            certify("ac", sc, env, ac, run_algorithm1(sc, e2, ac, config), mc);
        out.margin_used = margin;
        out.re_optimization_count = ++count;
        if (out.feasible_under_mc) return out;
        // jump by the measured shortfall, rounded up to the 1e-4 margin grid,
        // so the loop terminates in a handful of re-optimizations
        double shortfall = 0;
        for (int k = 0; k < sc.num_gns(); ++k)
            shortfall = std::max(shortfall,
                                 env.r_min - 1.96 * out.mc.mc_stderr(k) -
                                     out.mc.mc_mean(k));
        const double step =
            std::max(1e-4, std::ceil(shortfall / 1e-4) * 1e-4);
        if (margin + step > margin_cap) {
            out.error = "ac margin cap " + std::to_string(margin_cap) +
                        " exceeded at margin " + std::to_string(margin);
            return out;
        }
        margin += step;
    }
}

BaselineResult run_fixed_slot(const Scenario& sc, const EnvParams& env,
                              const QuadratureGrid& grid,
                              const PenaltyConfig& config, const McConfig& mc) {
    TrajectoryOptions opts;
    opts.common_slot = true;
    return certify("fixed-slot", sc, env, grid,
                   run_algorithm1(sc, env, grid, config, opts), mc);
}

BaselineResult run_fixed_altitude(const Scenario& sc, const EnvParams& env,
                                  const QuadratureGrid& grid,
                                  const PenaltyConfig& config,
                                  const McConfig& mc) {
    Scenario s2 = sc;
    s2.q_start.z() = s2.q_end.z() = sc.h_min;
    TrajectoryOptions opts;
    opts.fix_altitude = true;
    const DesignVars initial = hover_and_fly_plan(s2, sc.h_min);
    return certify("fixed-alt", s2, env, grid,
                   run_algorithm1(s2, env, grid, config, opts, initial), mc);
}

BaselineResult run_fixed_trajectory(const Scenario& sc, const EnvParams& env,
                                    const QuadratureGrid& grid,
                                    const PenaltyConfig& config,
                                    const McConfig& mc) {
    Scenario s2 = sc;
    s2.q_start.z() = s2.q_end.z() = sc.h_min;
    TrajectoryOptions opts;
    opts.freeze_trajectory = true;
    const DesignVars initial =
        hover_and_fly_plan(s2, sc.h_min, /*legs_at_v_max=*/true);
    return certify("fixed-traj", s2, env, grid,
                   run_algorithm1(s2, env, grid, config, opts, initial), mc);
}

BaselineResult run_scheme(const std::string& name, const Scenario& sc,
                          const EnvParams& env, const QuadratureGrid& grid,
                          const PenaltyConfig& config, const McConfig& mc) {
    if (name == "proposed") return run_proposed(sc, env, grid, config, mc);
    if (name == "ac") return run_ac_based(sc, env, config, mc);
    if (name == "fixed-slot") return run_fixed_slot(sc, env, grid, config, mc);
    if (name == "fixed-alt")
        return run_fixed_altitude(sc, env, grid, config, mc);
    if (name == "fixed-traj")
        return run_fixed_trajectory(sc, env, grid, config, mc);
    throw std::invalid_argument("run_scheme: unknown scheme " + name);
}

} // namespace uavplan
