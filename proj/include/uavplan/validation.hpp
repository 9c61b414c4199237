#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "uavplan/optimizer.hpp"

namespace uavplan {

struct McConfig {
    std::int64_t n_realizations = 30000;
    std::uint64_t seed = 1;
};

/// Monte Carlo certification of a plan under the true stochastic channel.
struct McReport {
    VectorXd mc_mean;            // per-GN MC mean rate, bps/Hz
    VectorXd mc_stderr;          // per-GN standard error of the mean
    VectorXd estimated;          // per-GN rate the optimizer worked with
    std::vector<bool> feasible;  // mean >= r_min - 1.96 * stderr
    std::int64_t n_realizations = 0;
    std::uint64_t seed = 0;

    bool all_feasible() const;
};

/// Draws n independent mission realizations (fresh channel per scheduled
/// slot), computes the time-averaged rate per GN, and compares against
/// env.r_min with a one-sided 95% rule. The estimated column is the
/// quadrature lower-bound rate on the given grid. Deterministic per seed.
McReport monte_carlo_validate(const DesignVars& plan, const Scenario& sc,
                              const EnvParams& env, const QuadratureGrid& grid,
                              std::int64_t n, std::uint64_t seed);

/// A scheme's plan together with the per-GN rate estimate it optimized for.
struct SchemePlan {
    std::string scheme;
    DesignVars plan;
    VectorXd estimated;
};

/// One (estimated, actual) scatter point of the overestimation analysis.
struct OverestimationPoint {
    std::string scheme;
    int gn = 0;
    double estimated = 0;
    double actual = 0;
    double stderr_ = 0;
};

std::vector<OverestimationPoint> overestimation_report(
    const std::vector<SchemePlan>& plans, const Scenario& sc,
    const EnvParams& env, std::int64_t n, std::uint64_t seed);

struct SweepRecord {
    std::string scheme;
    double value = 0;
    double completion_time = 0;
    bool converged = false;
    bool feasible = false;
    std::string error;
};

struct SweepResult {
    std::string parameter;
    std::vector<double> values;
    std::vector<SweepRecord> records;
    // scheme -> T non-increasing in the swept value within 2%
    std::map<std::string, bool> trend_non_increasing;
};

/// Runs each scheme at each parameter value. parameter is one of v_max,
/// k_rician (values in dB, the paper's axis), r_min. Individual run failures
/// are recorded in the sweep records, not thrown.
SweepResult run_sweep(const Scenario& sc, const EnvParams& env,
                      const std::string& parameter,
                      const std::vector<double>& values,
                      const std::vector<std::string>& schemes,
                      const QuadratureGrid& grid, const PenaltyConfig& config,
                      const McConfig& mc);

} // namespace uavplan
