#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "uavplan/core_model.hpp"
#include "uavplan/optimizer.hpp"

using namespace uavplan;

namespace {

Scenario desk_scenario(int n_slots = 40, double delta_max = 2.0) {
    Scenario sc;
    sc.gns = {{100, 220, 0}, {200, 280, 0}, {300, 220, 0}, {400, 280, 0}};
    sc.q_start = Vector3d{0, 250, 100};
    sc.q_end = Vector3d{500, 250, 100};
    sc.n_slots = n_slots;
    sc.delta_max = delta_max;
    return sc;
}

} // namespace

TEST_CASE("initialization") {
    EnvParams env;
    const QuadratureGrid grid = build_grids(4, 4, 4, env);

    SUBCASE("GN under the straight path") {
        Scenario sc;
        sc.gns = {{200, 0, 0}};
        sc.q_start = Vector3d{0, 0, 100};
        sc.q_end = Vector3d{400, 0, 100};
        sc.n_slots = 60;
        const auto [plan, state] = initialize(sc, env, grid);
        CHECK(validate_design(sc, plan).empty());
        bool over_gn = false;
        for (const auto& q : plan.trajectory)
            if ((q.head<2>() - Vector3d{200, 0, 0}.head<2>()).norm() < 1e-6)
                over_gn = true;
        CHECK(over_gn);
        CHECK(plan.schedule.sum() > 0);
    }
    SUBCASE("pure hover") {
        Scenario sc;
        sc.gns = {{0, 0, 0}};
        sc.q_start = sc.q_end = Vector3d{0, 0, 100};
        sc.n_slots = 10;
        const auto [plan, state] = initialize(sc, env, grid);
        CHECK(plan.total_time() ==
              doctest::Approx(sc.n_slots * sc.delta_max));
        for (const auto& q : plan.trajectory)
            CHECK((q - sc.q_start).norm() == doctest::Approx(0.0));
        CHECK(plan.schedule.sum() == doctest::Approx(sc.n_slots));
    }
    SUBCASE("desk scenario is hard-constraint feasible") {
        const Scenario sc = desk_scenario();
        const auto [plan, state] = initialize(sc, env, grid);
        CHECK(validate_design(sc, plan).empty());
    }
    SUBCASE("unreachable endpoints") {
        Scenario sc;
        sc.gns = {{0, 0, 0}};
        sc.q_start = Vector3d{0, 0, 100};
        sc.q_end = Vector3d{5000, 0, 100};
        sc.n_slots = 10; // 10 * 0.5 * 20 = 100 m budget
        CHECK_THROWS_AS(initialize(sc, env, grid), InfeasibleError);
    }
}

TEST_CASE("algorithm 1 with no rate requirement") {
    EnvParams env;
    env.r_min = 0.0;
    const QuadratureGrid grid = build_grids(4, 4, 4, env);
    Scenario sc;
    sc.gns = {{200, 50, 0}};
    sc.q_start = Vector3d{0, 0, 100};
    sc.q_end = Vector3d{400, 0, 100};
    sc.n_slots = 50;
    const OptimizeResult res = run_algorithm1(sc, env, grid);
    CHECK(res.converged);
    const double bound = std::max(sc.n_slots * sc.delta_min, 400.0 / sc.v_max);
    CHECK(res.plan.total_time() == doctest::Approx(bound).epsilon(1e-3));
    CHECK(res.trace.back().slack < 1e-5);
}

TEST_CASE("algorithm 1 on the desk scenario") {
    EnvParams env;
    const QuadratureGrid grid = build_grids(10, 10, 10, env);
    const Scenario sc = desk_scenario();
    PenaltyConfig config;
    const OptimizeResult res = run_algorithm1(sc, env, grid, config);
    REQUIRE(!res.trace.empty());
    CHECK(res.converged);
    CHECK(static_cast<int>(res.trace.size()) <= 50);
    const IterationRecord& last = res.trace.back();
    CHECK(last.slack <= 1e-6 * last.t);
    for (int k = 0; k < sc.num_gns(); ++k)
        CHECK(last.rates(k) >= env.r_min - 1e-6);
    CHECK(validate_design(sc, res.plan).empty());

    SUBCASE("eta schedule is exactly geometric with cap") {
        for (size_t i = 0; i < res.trace.size(); ++i) {
            const double expect = std::min(
                config.eta0 * std::pow(config.growth, static_cast<double>(i)),
                config.eta_max);
            CHECK(res.trace[i].eta == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    SUBCASE("determinism") {
        const OptimizeResult res2 = run_algorithm1(sc, env, grid, config);
        REQUIRE(res2.trace.size() == res.trace.size());
        for (size_t i = 0; i < res.trace.size(); ++i) {
            CHECK(res2.trace[i].t == res.trace[i].t);
            CHECK(res2.trace[i].slack == res.trace[i].slack);
        }
    }
}

TEST_CASE("penalty monotonicity at the cap") {
    EnvParams env;
    const QuadratureGrid grid = build_grids(6, 6, 6, env);
    Scenario sc;
    sc.gns = {{50, 0, 0}, {150, 0, 0}};
    sc.q_start = Vector3d{0, 0, 100};
    sc.q_end = Vector3d{200, 0, 100};
    sc.n_slots = 30;
    PenaltyConfig config;
    config.eta0 = config.eta_max = 1e5; // start at the cap
    config.max_outer = 12;
    const OptimizeResult res = run_algorithm1(sc, env, grid, config);
    REQUIRE(res.trace.size() >= 2);
    for (size_t i = 1; i < res.trace.size(); ++i)
        CHECK(res.trace[i].t <= res.trace[i - 1].t + 1e-6);
}
