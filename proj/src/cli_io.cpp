#include "uavplan/cli_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

namespace uavplan {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

void reject_unknown(const json& obj, const char* block,
                    std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) known = true;
        if (!known)
            throw std::invalid_argument(std::string("config: unknown field ") +
                                        block + "." + key);
    }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

Vector3d read_vec3(const json& arr, const char* name) {
    if (!arr.is_array() || arr.size() != 3)
        throw std::invalid_argument(std::string("config: ") + name +
                                    " must be [x, y, z]");
    return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

} // namespace

RunConfig parse_config(const json& doc) {
    reject_unknown(doc, "",
                   {"scenario", "environment", "quadrature", "penalty",
                    "validation", "scheme", "output_dir"});
    RunConfig cfg;

    if (doc.contains("scenario")) {
        const json& s = doc.at("scenario");
        reject_unknown(s, "scenario",
                       {"gns", "q_start", "q_end", "h_min", "h_max", "v_max",
                        "v_z", "n_slots", "delta_max", "delta_min"});
        if (s.contains("gns")) {
            cfg.scenario.gns.clear();
            for (const json& g : s.at("gns")) {
                if (!g.is_array() || g.size() != 2)
                    throw std::invalid_argument(
                        "config: scenario.gns entries must be [x, y]");
                cfg.scenario.gns.push_back(
                    {g[0].get<double>(), g[1].get<double>(), 0.0});
            }
        }
        if (s.contains("q_start"))
            cfg.scenario.q_start = read_vec3(s.at("q_start"), "q_start");
        if (s.contains("q_end"))
            cfg.scenario.q_end = read_vec3(s.at("q_end"), "q_end");
        read_field(s, "h_min", cfg.scenario.h_min);
        read_field(s, "h_max", cfg.scenario.h_max);
        read_field(s, "v_max", cfg.scenario.v_max);
        read_field(s, "v_z", cfg.scenario.v_z);
        read_field(s, "n_slots", cfg.scenario.n_slots);
        read_field(s, "delta_max", cfg.scenario.delta_max);
        read_field(s, "delta_min", cfg.scenario.delta_min);
    }

    if (doc.contains("environment")) {
        const json& e = doc.at("environment");
        reject_unknown(e, "environment",
                       {"a1", "a2", "alpha_los", "alpha_nlos", "beta_los_db",
                        "beta_nlos_db", "p_tx_dbm", "noise_dbm", "k_rician_db",
                        "sigma_db", "r_min"});
        read_field(e, "a1", cfg.env.a1);
        read_field(e, "a2", cfg.env.a2);
        read_field(e, "alpha_los", cfg.env.alpha_los);
        read_field(e, "alpha_nlos", cfg.env.alpha_nlos);
        if (e.contains("beta_los_db"))
            cfg.env.beta_los = db_to_linear(e.at("beta_los_db").get<double>());
        if (e.contains("beta_nlos_db"))
            cfg.env.beta_nlos =
                db_to_linear(e.at("beta_nlos_db").get<double>());
        if (e.contains("p_tx_dbm"))
            cfg.env.p_tx = dbm_to_watt(e.at("p_tx_dbm").get<double>());
        if (e.contains("noise_dbm"))
            cfg.env.noise = dbm_to_watt(e.at("noise_dbm").get<double>());
        if (e.contains("k_rician_db"))
            cfg.env.k_rician =
                db_to_linear(e.at("k_rician_db").get<double>());
        read_field(e, "sigma_db", cfg.env.sigma_db);
        read_field(e, "r_min", cfg.env.r_min);
    }

    if (doc.contains("quadrature")) {
        const json& q = doc.at("quadrature");
        reject_unknown(q, "quadrature", {"u_l", "u_n", "u_nu"});
        read_field(q, "u_l", cfg.u_l);
        read_field(q, "u_n", cfg.u_n);
        read_field(q, "u_nu", cfg.u_nu);
        if (cfg.u_l < 1 || cfg.u_n < 1 || cfg.u_nu < 1)
            throw std::invalid_argument("config: quadrature sizes must be >= 1");
    }

    if (doc.contains("penalty")) {
        const json& p = doc.at("penalty");
        reject_unknown(p, "penalty",
                       {"eta0", "eta_max", "growth", "conv_tol", "max_outer"});
        read_field(p, "eta0", cfg.penalty.eta0);
        read_field(p, "eta_max", cfg.penalty.eta_max);
        read_field(p, "growth", cfg.penalty.growth);
        read_field(p, "conv_tol", cfg.penalty.conv_tol);
        read_field(p, "max_outer", cfg.penalty.max_outer);
    }

    if (doc.contains("validation")) {
        const json& v = doc.at("validation");
        reject_unknown(v, "validation", {"n_realizations", "seed"});
        read_field(v, "n_realizations", cfg.n_realizations);
        read_field(v, "seed", cfg.seed);
        if (cfg.n_realizations < 1)
            throw std::invalid_argument(
                "config: validation.n_realizations must be >= 1");
    }

    read_field(doc, "scheme", cfg.scheme);
    read_field(doc, "output_dir", cfg.output_dir);

    try {
        cfg.scenario.validate();
        cfg.env.validate();
        cfg.penalty.validate();
    } catch (const std::exception& ex) {
        throw std::invalid_argument(std::string("config: ") + ex.what());
    }

    // normalized echo in config units (dB fields preserved as dB)
    json echo = doc;
    json& s = echo["scenario"];
    if (!s.contains("gns")) {
        s["gns"] = json::array();
        for (const Vector3d& g : cfg.scenario.gns)
            s["gns"].push_back({g.x(), g.y()});
    }
    cfg.echo = std::move(echo);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& ex) {
        throw std::runtime_error("config " + path + ": " + ex.what());
    }
    return parse_config(doc);
}

void apply_ci_profile(RunConfig& config) {
    config.scenario.n_slots = 40;
    config.scenario.delta_max = 2.0;
    config.u_l = config.u_n = config.u_nu = 20;
    config.n_realizations = 5000;
}

void write_results(const BaselineResult& result, const RunConfig& config,
                   const Scenario& sc, const std::string& out_dir,
                   double runtime_s) {
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    const int k_gns = sc.num_gns();
    const SnrGrids snr(config.grid(), config.env);

    {
        auto out = open_out(dir / "trajectory.csv");
        out << "slot,x,y,z,delta_s,scheduled_gn";
        for (int k = 0; k < k_gns; ++k)
            out << ",elevation_deg_" << k << ",p_los_" << k << ",se_lb_" << k;
        out << "\n";
        for (int n = 0; n <= sc.n_slots; ++n) {
            const Vector3d& q = result.plan.trajectory[n];
            const double delta = n == 0 ? 0.0 : result.plan.slots(n - 1);
            const int gn = n == 0 ? -1 : result.plan.scheduled_gn(n);
            out << n << ',' << fmt9(q.x()) << ',' << fmt9(q.y()) << ','
                << fmt9(q.z()) << ',' << fmt9(delta) << ',' << gn;
            for (int k = 0; k < k_gns; ++k) {
                const double theta = elevation_angle(q, sc.gns[k]);
                const SeBreakdown se =
                    se_lower_bound(q, sc.gns[k], snr, config.env);
                out << ',' << fmt9(theta) << ','
                    << fmt9(los_probability(theta, config.env)) << ','
                    << fmt9(se.se_total);
            }
            out << "\n";
        }
    }

    {
        auto out = open_out(dir / "schedule.csv");
        out << "slot";
        for (int k = 0; k < k_gns; ++k) out << ",gn_" << k;
        out << "\n";
        for (int n = 1; n <= sc.n_slots; ++n) {
            out << n;
            for (int k = 0; k < k_gns; ++k)
                out << ',' << (result.plan.schedule(k, n - 1) > 0.5 ? 1 : 0);
            out << "\n";
        }
    }

    {
        auto out = open_out(dir / "convergence.csv");
        out << "iteration,t_s,objective,slack,eta\n";
        for (const IterationRecord& rec : result.trace)
            out << rec.iteration << ',' << fmt9(rec.t) << ','
                << fmt9(rec.objective) << ',' << fmt9(rec.slack) << ','
                << fmt9(rec.eta) << "\n";
    }

    {
        json mc;
        mc["n_realizations"] = result.mc.n_realizations;
        mc["seed"] = result.mc.seed;
        mc["r_min"] = config.env.r_min;
        mc["per_gn"] = json::array();
        for (int k = 0; k < k_gns; ++k)
            mc["per_gn"].push_back({{"gn", k},
                                    {"mc_mean", result.mc.mc_mean(k)},
                                    {"mc_stderr", result.mc.mc_stderr(k)},
                                    {"estimated", result.mc.estimated(k)},
                                    {"feasible", bool(result.mc.feasible[k])}});
        open_out(dir / "mc_report.json") << mc.dump(2) << "\n";
    }

    {
        json summary;
        summary["scheme"] = result.scheme;
        summary["completion_time"] = result.completion_time;
        summary["converged"] = result.converged;
        summary["feasible_under_mc"] = result.feasible_under_mc;
        summary["margin_used"] = result.margin_used;
        summary["re_optimization_count"] = result.re_optimization_count;
        summary["seed"] = config.seed;
        summary["error"] = result.error;
        summary["runtime_s"] = runtime_s;
        summary["config"] = config.echo;
        open_out(dir / "summary.json") << summary.dump(2) << "\n";
    }
}

DesignVars read_plan(const std::string& dir, const Scenario& sc) {
    DesignVars plan;
    plan.trajectory.clear();
    plan.slots = VectorXd::Zero(sc.n_slots);
    plan.schedule = MatrixXd::Zero(sc.num_gns(), sc.n_slots);

    const fs::path base(dir);
    std::ifstream traj(base / "trajectory.csv");
    if (!traj)
        throw std::runtime_error("cannot read " +
                                 (base / "trajectory.csv").string());
    std::string line;
    std::getline(traj, line); // header
    while (std::getline(traj, line)) {
        std::istringstream row(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() < 5)
            throw std::runtime_error("malformed trajectory.csv row: " + line);
        const int n = static_cast<int>(vals[0]);
        plan.trajectory.push_back({vals[1], vals[2], vals[3]});
        if (n >= 1 && n <= sc.n_slots) plan.slots(n - 1) = vals[4];
    }
    if (static_cast<int>(plan.trajectory.size()) != sc.n_slots + 1)
        throw std::runtime_error("trajectory.csv row count does not match "
                                 "the configured slot count");

    std::ifstream sched(base / "schedule.csv");
    if (!sched)
        throw std::runtime_error("cannot read " +
                                 (base / "schedule.csv").string());
    std::getline(sched, line); // header
    while (std::getline(sched, line)) {
        std::istringstream row(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
        if (static_cast<int>(vals.size()) != sc.num_gns() + 1)
            throw std::runtime_error("malformed schedule.csv row: " + line);
        const int n = static_cast<int>(vals[0]);
        if (n < 1 || n > sc.n_slots)
            throw std::runtime_error("schedule.csv slot index out of range");
        for (int k = 0; k < sc.num_gns(); ++k)
            plan.schedule(k, n - 1) = vals[k + 1];
    }
    return plan;
}

namespace {

int do_solve(const RunConfig& cfg) {
    const QuadratureGrid grid = cfg.grid();
    const auto t0 = std::chrono::steady_clock::now();
    const BaselineResult result =
        run_scheme(cfg.scheme, cfg.scenario, cfg.env, grid, cfg.penalty,
                   cfg.mc());
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    // baseline schemes at fixed altitude report against the endpoint override
    Scenario sc = cfg.scenario;
    if (cfg.scheme == "fixed-alt" || cfg.scheme == "fixed-traj")
        sc.q_start.z() = sc.q_end.z() = sc.h_min;
    write_results(result, cfg, sc, cfg.output_dir, secs);
    std::printf("%s: T = %s s, converged = %d, mc_feasible = %d\n",
                result.scheme.c_str(), fmt9(result.completion_time).c_str(),
                result.converged, result.feasible_under_mc);
    if (!result.error.empty()) {
        std::fprintf(stderr, "error: %s\n", result.error.c_str());
        return 2;
    }
    return result.feasible_under_mc ? 0 : 2;
}

int do_validate(const RunConfig& cfg, const std::string& plan_dir) {
    Scenario sc = cfg.scenario;
    DesignVars plan = read_plan(plan_dir, sc);
    // plans written by the fixed-altitude baselines carry overridden endpoints
    sc.q_start = plan.trajectory.front();
    sc.q_end = plan.trajectory.back();
    const McReport rep = monte_carlo_validate(plan, sc, cfg.env, cfg.grid(),
                                              cfg.n_realizations, cfg.seed);
    for (int k = 0; k < sc.num_gns(); ++k)
        std::printf("gn %d: mc %.6f +/- %.6f, estimated %.6f, %s\n", k,
                    rep.mc_mean(k), rep.mc_stderr(k), rep.estimated(k),
                    rep.feasible[k] ? "feasible" : "INFEASIBLE");
    return rep.all_feasible() ? 0 : 2;
}

int do_sweep(const RunConfig& cfg, const std::string& param,
             const std::vector<double>& values,
             std::vector<std::string> schemes) {
    if (schemes.empty()) schemes.push_back(cfg.scheme);
    const SweepResult sweep =
        run_sweep(cfg.scenario, cfg.env, param, values, schemes, cfg.grid(),
                  cfg.penalty, cfg.mc());
    fs::create_directories(cfg.output_dir);
    {
        auto out = open_out(fs::path(cfg.output_dir) / "sweep.csv");
        out << "scheme," << param << ",completion_time,converged,feasible,error\n";
        for (const SweepRecord& rec : sweep.records)
            out << rec.scheme << ',' << fmt9(rec.value) << ','
                << fmt9(rec.completion_time) << ',' << rec.converged << ','
                << rec.feasible << ',' << rec.error << "\n";
    }
    json doc;
    doc["parameter"] = sweep.parameter;
    doc["values"] = sweep.values;
    doc["trend_non_increasing"] = sweep.trend_non_increasing;
    open_out(fs::path(cfg.output_dir) / "sweep.json") << doc.dump(2) << "\n";
    for (const auto& [scheme, ok] : sweep.trend_non_increasing)
        std::printf("%s: T non-increasing in %s within 2%%: %s\n",
                    scheme.c_str(), param.c_str(), ok ? "yes" : "no");
    return 0;
}

int do_compare(const RunConfig& cfg) {
    const QuadratureGrid grid = cfg.grid();
    const std::vector<std::string> schemes = {"proposed", "ac", "fixed-slot",
                                              "fixed-alt", "fixed-traj"};
    std::vector<SchemePlan> plans;
    json records = json::array();
    int status = 0;
    for (const std::string& name : schemes) {
        const auto t0 = std::chrono::steady_clock::now();
        const BaselineResult result = run_scheme(
            name, cfg.scenario, cfg.env, grid, cfg.penalty, cfg.mc());
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
        Scenario sc = cfg.scenario;
        if (name == "fixed-alt" || name == "fixed-traj")
            sc.q_start.z() = sc.q_end.z() = sc.h_min;
        write_results(result, cfg, sc,
                      (fs::path(cfg.output_dir) / name).string(), secs);
        records.push_back({{"scheme", result.scheme},
                           {"completion_time", result.completion_time},
                           {"converged", result.converged},
                           {"feasible_under_mc", result.feasible_under_mc},
                           {"margin_used", result.margin_used},
                           {"error", result.error}});
        std::printf("%s: T = %s s, mc_feasible = %d\n", result.scheme.c_str(),
                    fmt9(result.completion_time).c_str(),
                    result.feasible_under_mc);
        if (name == "proposed" && !result.feasible_under_mc) status = 2;
        // fixed-altitude plans live on the endpoint-overridden scenario and
        // cannot enter the shared-scenario scatter
        if (name != "fixed-alt" && name != "fixed-traj")
            plans.push_back({name, result.plan, result.estimated_rates});
    }
    {
        const std::vector<OverestimationPoint> points = overestimation_report(
            plans, cfg.scenario, cfg.env, cfg.n_realizations, cfg.seed);
        auto out = open_out(fs::path(cfg.output_dir) / "overestimation.csv");
        out << "scheme,gn,estimated,actual,stderr\n";
        for (const OverestimationPoint& p : points)
            out << p.scheme << ',' << p.gn << ',' << fmt9(p.estimated) << ','
                << fmt9(p.actual) << ',' << fmt9(p.stderr_) << "\n";
    }
    json summary;
    summary["records"] = std::move(records);
    summary["seed"] = cfg.seed;
    summary["config"] = cfg.echo;
    open_out(fs::path(cfg.output_dir) / "summary.json") << summary.dump(2)
                                                        << "\n";
    return status;
}

} // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"UAV mission planning toolkit"};
    app.require_subcommand(1);

    std::string config_path, scheme, plan_dir, param, profile, out_dir;
    std::vector<double> values;
    std::vector<std::string> schemes;
    std::uint64_t seed = 0;
    bool have_seed = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config path")
            ->required();
        sub->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { have_seed = true; });
        sub->add_option("--profile", profile, "ci shrinks run sizes")
            ->check(CLI::IsMember({"ci"}));
        sub->add_option("--out", out_dir, "override the output directory");
    };

    CLI::App* solve = app.add_subcommand("solve", "optimize one scheme");
    add_common(solve);
    solve->add_option("--scheme", scheme, "scheme tag")
        ->check(CLI::IsMember(
            {"proposed", "ac", "fixed-slot", "fixed-alt", "fixed-traj"}));

    CLI::App* validate =
        app.add_subcommand("validate", "Monte Carlo check of a written plan");
    add_common(validate);
    validate->add_option("--plan", plan_dir, "directory with a written plan")
        ->required();

    CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep");
    add_common(sweep);
    sweep->add_option("--param", param, "v_max | k_rician | r_min")
        ->required()
        ->check(CLI::IsMember({"v_max", "k_rician", "r_min"}));
    sweep->add_option("--values", values, "sorted parameter values")
        ->required()
        ->delimiter(',');
    sweep->add_option("--scheme", schemes, "schemes to sweep")->delimiter(',');

    CLI::App* compare =
        app.add_subcommand("compare", "all five schemes plus the "
                                      "overestimation report");
    add_common(compare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg = load_config(config_path);
        if (profile == "ci") apply_ci_profile(cfg);
        if (have_seed) cfg.seed = seed;
        if (!scheme.empty()) cfg.scheme = scheme;
        if (!out_dir.empty()) cfg.output_dir = out_dir;

        if (solve->parsed()) return do_solve(cfg);
        if (validate->parsed()) return do_validate(cfg, plan_dir);
        if (sweep->parsed()) return do_sweep(cfg, param, values, schemes);
        return do_compare(cfg);
    } catch (const InfeasibleError& ex) {
        std::fprintf(stderr, "infeasible: %s\n", ex.what());
        return 2;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
}

} // namespace uavplan
