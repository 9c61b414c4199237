#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "uavplan/baselines.hpp"

using namespace uavplan;

namespace {

Scenario line_scenario() {
    Scenario sc;
    sc.gns = {{50, 0, 0}, {150, 0, 0}};
    sc.q_start = Vector3d{0, 0, 100};
    sc.q_end = Vector3d{200, 0, 100};
    sc.n_slots = 20;
    sc.delta_max = 2.0;
    return sc;
}

} // namespace

TEST_CASE("fixed slot: common duration and collapse at r_min = 0") {
    EnvParams env;
    env.r_min = 0.0;
    const QuadratureGrid grid = build_grids(4, 4, 4, env);
    Scenario sc;
    sc.gns = {{0, 0, 0}};
    sc.q_start = sc.q_end = Vector3d{0, 0, 100};
    sc.n_slots = 8;
    const McConfig mc{500, 3};

    const BaselineResult res = run_fixed_slot(sc, env, grid, {}, mc);
    CHECK(res.scheme == "fixed-slot");
    CHECK(res.converged);
    for (int n = 1; n < sc.n_slots; ++n)
        CHECK(res.plan.slots(n) == doctest::Approx(res.plan.slots(0)));
    CHECK(res.completion_time ==
          doctest::Approx(sc.n_slots * sc.delta_min).epsilon(1e-2));
}

TEST_CASE("fixed slot: restriction never beats the proposed scheme") {
    EnvParams env;
    env.r_min = 2.0;
    const QuadratureGrid grid = build_grids(6, 6, 6, env);
    const Scenario sc = line_scenario();
    const McConfig mc{500, 3};

    const BaselineResult fs = run_fixed_slot(sc, env, grid, {}, mc);
    const BaselineResult p = run_proposed(sc, env, grid, {}, mc);
    CHECK(fs.converged);
    CHECK(p.converged);
    CHECK(p.completion_time <= fs.completion_time + 1e-3);
}

TEST_CASE("fixed altitude: every waypoint at h_min") {
    EnvParams env;
    env.r_min = 2.0;
    const QuadratureGrid grid = build_grids(6, 6, 6, env);
    const Scenario sc = line_scenario();
    const McConfig mc{500, 3};

    const BaselineResult res = run_fixed_altitude(sc, env, grid, {}, mc);
    CHECK(res.converged);
    for (const Vector3d& q : res.plan.trajectory)
        CHECK(q.z() == doctest::Approx(sc.h_min));
}

TEST_CASE("fixed trajectory: frozen path, travel slots at v_max") {
    EnvParams env;
    env.r_min = 2.0;
    const QuadratureGrid grid = build_grids(6, 6, 6, env);
    const Scenario sc = line_scenario();
    const McConfig mc{500, 3};

    const BaselineResult res = run_fixed_trajectory(sc, env, grid, {}, mc);
    CHECK(res.converged);

    Scenario s2 = sc;
    s2.q_start.z() = s2.q_end.z() = sc.h_min;
    const DesignVars frozen = hover_and_fly_plan(s2, sc.h_min, true);
    REQUIRE(res.plan.trajectory.size() == frozen.trajectory.size());
    for (size_t n = 0; n < frozen.trajectory.size(); ++n)
        CHECK((res.plan.trajectory[n] - frozen.trajectory[n]).norm() <= 1e-9);

    for (int n = 1; n <= sc.n_slots; ++n) {
        const double len =
            (res.plan.trajectory[n] - res.plan.trajectory[n - 1]).norm();
        if (len > 1e-9)
            CHECK(len == doctest::Approx(sc.v_max * res.plan.slots(n - 1))
                             .epsilon(1e-9));
    }
}

TEST_CASE("ac baseline: r_min = 0 needs no margin") {
    EnvParams env;
    env.r_min = 0.0;
    Scenario sc;
    sc.gns = {{0, 0, 0}};
    sc.q_start = sc.q_end = Vector3d{0, 0, 100};
    sc.n_slots = 8;
    const McConfig mc{500, 3};

    const BaselineResult res = run_ac_based(sc, env, {}, mc);
    CHECK(res.scheme == "ac");
    CHECK(res.margin_used == 0.0);
    CHECK(res.re_optimization_count == 1);
    CHECK(res.feasible_under_mc);
    CHECK(res.error.empty());
}

TEST_CASE("ac baseline: margin cap failure is explicit") {
    EnvParams env;
    env.r_min = 8.0; // unreachable time-averaged target
    Scenario sc;
    sc.gns = {{50, 0, 0}, {150, 0, 0}};
    sc.q_start = Vector3d{0, 0, 100};
    sc.q_end = Vector3d{200, 0, 100};
    sc.n_slots = 16;
    sc.delta_max = 2.0;
    const McConfig mc{500, 3};

    const BaselineResult res = run_ac_based(sc, env, {}, mc, 0.01);
    CHECK_FALSE(res.feasible_under_mc);
    CHECK_FALSE(res.error.empty());
}

TEST_CASE("run_scheme dispatch") {
    EnvParams env;
    env.r_min = 0.0;
    const QuadratureGrid grid = build_grids(4, 4, 4, env);
    Scenario sc;
    sc.gns = {{0, 0, 0}};
    sc.q_start = sc.q_end = Vector3d{0, 0, 100};
    sc.n_slots = 6;
    const McConfig mc{200, 3};

    CHECK(run_scheme("proposed", sc, env, grid, {}, mc).scheme == "proposed");
    CHECK_THROWS_AS(run_scheme("bogus", sc, env, grid, {}, mc),
                    std::invalid_argument);
}
