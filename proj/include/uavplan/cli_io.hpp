#pragma once

#include <string>

#include <json.hpp>

#include "uavplan/baselines.hpp"

namespace uavplan {

/// Fully resolved run configuration. Environment fields are linear-scale;
/// dB-valued config entries are converted exactly once at load.
struct RunConfig {
    Scenario scenario;
    EnvParams env;
    int u_l = 40, u_n = 40, u_nu = 40;
    PenaltyConfig penalty;
    std::int64_t n_realizations = 30000;
    std::uint64_t seed = 1;
    std::string scheme = "proposed";
    std::string output_dir = "out";
    nlohmann::json echo; // the parsed document, for summary round-trips

    QuadratureGrid grid() const { return build_grids(u_l, u_n, u_nu, env); }
    McConfig mc() const { return {n_realizations, seed}; }
};

/// Parses a JSON config, applying Table-1 defaults for omitted fields and
/// rejecting unknown ones.
RunConfig load_config(const std::string& path);

/// Same, from an already-parsed document (used for the echoed round-trip).
RunConfig parse_config(const nlohmann::json& doc);

/// Shrinks scenario and sampling sizes to CI scale: N = 40, U = 20, 5000
/// Monte Carlo realizations, delta_max = 2 s.
void apply_ci_profile(RunConfig& config);

/// Writes trajectory.csv, schedule.csv, convergence.csv, mc_report.json and
/// summary.json for one scheme run. runtime_s is the only
/// non-deterministic field and lives in summary.json.
void write_results(const BaselineResult& result, const RunConfig& config,
                   const Scenario& sc, const std::string& out_dir,
                   double runtime_s);

/// Reads trajectory.csv + schedule.csv back into a plan.
DesignVars read_plan(const std::string& dir, const Scenario& sc);

/// Entry point behind the planner binary: solve | validate | sweep | compare.
/// Returns 0 on success, 2 on infeasibility, 1 on error.
int cli_main(int argc, char** argv);

} // namespace uavplan
