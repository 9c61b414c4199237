// Acceptance gate: evaluates the 12 release criteria and prints one
// PASS/FAIL line per criterion. Heavy end-to-end evidence (criteria 7-10,
// 12) comes from two `compare` runs at the CI profile; the first run's
// output directory is re-read for the per-scheme records.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavplan/cli_io.hpp"

using namespace uavplan;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::array<std::string, 13> g_lines;

void report(int id, bool ok, const std::string& detail) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "criterion %2d: %s  ", id,
                  ok ? "PASS" : "FAIL");
    g_lines[id] = buf + detail;
    if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Geometry {
    Vector3d q;
    Vector3d w;
};

std::vector<Geometry> random_geometries(int count) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uh(10.0, 200.0);
    std::uniform_real_distribution<double> ur(0.0, 300.0);
    std::uniform_real_distribution<double> uphi(0.0, 2.0 * std::numbers::pi);
    std::vector<Geometry> out;
    out.reserve(count);
    while (static_cast<int>(out.size()) < count) {
        const double h = uh(rng), r = ur(rng), phi = uphi(rng);
        out.push_back({{0, 0, h}, {r * std::cos(phi), r * std::sin(phi), 0}});
    }
    return out;
}

// criteria 1-3: bound conservativeness, Jensen overestimation, refinement
void bound_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    const EnvParams env;
    const std::array<int, 4> levels = {10, 20, 40, 80};
    std::array<SnrGrids, 4> snr;
    for (size_t i = 0; i < levels.size(); ++i)
        snr[i] = SnrGrids(build_grids(levels[i], levels[i], levels[i], env),
                          env);

    const std::vector<Geometry> geos = random_geometries(100);
    int c1_bad = 0, c2_bad = 0, c3_mono_bad = 0, c3_gap_bad = 0;
    double c1_worst = -1e300, c2_worst = -1e300;
    for (size_t g = 0; g < geos.size(); ++g) {
        const auto& [q, w] = geos[g];
        const OracleEstimate mc =
            se_expected_oracle(q, w, env, 30000, 1000 + g);
        std::array<double, 4> lb{};
        for (size_t i = 0; i < levels.size(); ++i)
            lb[i] = se_lower_bound(q, w, snr[i], env).se_total;
        const double ac = se_avg_channel(q, w, env).se_total;

        c1_worst = std::max(c1_worst, lb[2] - mc.mean - 3.0 * mc.stderr_);
        if (lb[2] > mc.mean + 3.0 * mc.stderr_) ++c1_bad;
        c2_worst = std::max(c2_worst, mc.mean - 3.0 * mc.stderr_ - ac);
        if (ac < mc.mean - 3.0 * mc.stderr_) ++c2_bad;
        for (size_t i = 1; i < levels.size(); ++i)
            if (lb[i] < lb[i - 1]) ++c3_mono_bad;
        // gap to oracle shrinks from U=10 to U=80 iff the bound rises
        if (!(lb[3] > lb[0])) ++c3_gap_bad;
    }
    const double secs = seconds_since(t0);
    report(1, c1_bad == 0 && secs < 120.0,
           "quadrature LB (U=40) <= MC + 3 sigma on 100 geometries (worst "
           "excess " + fmt(c1_worst) + ", " + fmt(secs) + " s)");
    report(2, c2_bad == 0,
           "average-channel SE >= MC - 3 sigma on the same geometries "
           "(worst shortfall " + fmt(c2_worst) + ")");
    report(3, c3_mono_bad == 0 && c3_gap_bad == 0,
           "LB non-decreasing over U in {10,20,40,80}; gap at U=80 below "
           "U=10 (" + std::to_string(c3_mono_bad) + " monotonicity, " +
           std::to_string(c3_gap_bad) + " gap violations)");
}

void lemma1_identity() {
    const EnvParams env;
    double worst = 0;
    for (int i = 0; i <= 10000; ++i) {
        const double theta = 90.0 * i / 10000.0;
        worst = std::max(worst, std::abs(1.0 - los_probability(theta, env) -
                                         symmetric_nlos_sigmoid(theta, env)));
    }
    report(4, worst <= 1e-12,
           "Lemma 1 sigmoid identity, max deviation " + fmt(worst) +
           " over 10^4 angles");
}

void lemma2_convexity() {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> du(0.0, 1.0);
    double min_eig_seen = 1e300;
    for (int trial = 0; trial < 1000; ++trial) {
        const double x = 0.5 + 4.0 * du(rng);
        const double y = 100.0 + 1e5 * du(rng);
        const double c = 1e3 * du(rng);
        const double alpha = std::array{2.0, 2.7, 4.0, 6.0}[trial % 4];
        auto f = [&](double xx, double yy) {
            return std::log2(1.0 + c / std::pow(yy, alpha / 2.0)) / xx;
        };
        const double hx = 1e-4 * x, hy = 1e-4 * y;
        const double fxx =
            (f(x + hx, y) - 2 * f(x, y) + f(x - hx, y)) / (hx * hx);
        const double fyy =
            (f(x, y + hy) - 2 * f(x, y) + f(x, y - hy)) / (hy * hy);
        const double fxy = (f(x + hx, y + hy) - f(x + hx, y - hy) -
                            f(x - hx, y + hy) + f(x - hx, y - hy)) /
                           (4 * hx * hy);
        const double tr = fxx + fyy;
        const double det = fxx * fyy - fxy * fxy;
        const double min_eig =
            0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4 * det)));
        min_eig_seen = std::min(min_eig_seen, min_eig);
    }
    report(5, min_eig_seen >= -1e-7,
           "Lemma 2 rate-term convexity, min Hessian eigenvalue " +
           fmt(min_eig_seen) + " over 10^3 points, alpha in {2,2.7,4,6}");
}

void bound_chain() {
    constexpr double c = std::numbers::pi / 180.0;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> du(0.0, 1.0);
    double worst = -1e300;

    // sine linearization over-estimates
    for (int i = 0; i < 2000; ++i) {
        const double anchor = 90.0 * du(rng);
        const double theta = 90.0 * du(rng);
        const double lin = std::sin(c * anchor) +
                           c * std::cos(c * anchor) * (theta - anchor);
        worst = std::max(worst, std::sin(c * theta) - lin);
    }

    // quadratic transform on z / |q - w|, tight at lambda*
    const Vector3d w{0, 0, 0};
    for (int i = 0; i < 2000; ++i) {
        const Vector3d q{500 * du(rng), 500 * du(rng), 10 + 190 * du(rng)};
        const double d = (q - w).norm();
        const double exact = q.z() / d;
        const double lam_star = update_lambda(q, w);
        for (const double lam : {0.0, 0.5 * lam_star, lam_star, 2 * lam_star}) {
            const double val = 2.0 * lam * std::sqrt(q.z()) - lam * lam * d;
            worst = std::max(worst, val - exact);
        }
        worst = std::max(worst,
                         std::abs(2.0 * lam_star * std::sqrt(q.z()) -
                                  lam_star * lam_star * d - exact));
    }

    // quadratic transform on delta * r, tight at mu*
    for (int i = 0; i < 2000; ++i) {
        const double delta = 1e-3 + 2.0 * du(rng);
        const double r = 8.0 * du(rng);
        const double mu_star = update_mu(delta, r);
        for (const double mu : {0.0, 0.5 * mu_star, mu_star, 2 * mu_star}) {
            const double val = 2.0 * mu * std::sqrt(r) - mu * mu / delta;
            worst = std::max(worst, val - delta * r);
        }
        worst = std::max(worst, std::abs(2.0 * mu_star * std::sqrt(r) -
                                         mu_star * mu_star / delta -
                                         delta * r));
    }

    // linearized r-hat under-estimates the anchored bound globally
    const EnvParams env;
    Scenario sc;
    sc.gns = {{0, 0, 0}};
    sc.n_slots = 2;
    const QuadratureGrid grid = build_grids(8, 8, 8, env);
    const SnrGrids snr(grid, env);
    const std::vector<Vector3d> traj = {
        {0, 0, 100}, {60, 10, 110}, {120, 20, 120}};
    MatrixXd theta_prev(1, 2);
    for (int n = 1; n <= 2; ++n)
        theta_prev(0, n - 1) = elevation_angle(traj[n], sc.gns[0]) - 3.0;
    const ScaCoefficients co =
        compute_sca_coefficients(traj, theta_prev, grid, env, sc.gns);
    const double x_sym = env.a1 + std::log(env.a1) / env.a2;
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = 1 + (trial % 2);
        const Vector3d q = traj[n] + Vector3d{160 * du(rng) - 80,
                                              160 * du(rng) - 80,
                                              80 * du(rng) - 40};
        if ((q - sc.gns[0]).norm() < 1.0) continue;
        const double theta = std::clamp(
            theta_prev(0, n - 1) + 50.0 * du(rng) - 25.0, 0.5, 89.5);
        const double lb = r_hat_lb(q, sc.gns[0], theta, co, 0, n, env, x_sym);
        const double direct = r_hat(q, sc.gns[0], theta, snr, env);
        worst = std::max(worst, lb - direct);
    }

    report(6, worst <= 1e-9,
           "bound chain (sine, both quadratic transforms, r-hat LB), worst "
           "slack " + fmt(worst));
}

void penalty_monotonicity() {
    EnvParams env;
    env.r_min = 2.0;
    Scenario sc;
    sc.gns = {{50, 0, 0}, {150, 0, 0}};
    sc.q_start = Vector3d{0, 0, 100};
    sc.q_end = Vector3d{200, 0, 100};
    sc.n_slots = 20;
    sc.delta_max = 2.0;
    const QuadratureGrid grid = build_grids(10, 10, 10, env);
    PenaltyConfig pc;
    pc.eta0 = pc.eta_max = 1e5; // at the cap from the first iteration

    const OptimizeResult res = run_algorithm1(sc, env, grid, pc);
    int checked = 0;
    double worst_rise = -1e300;
    for (size_t i = 1; i < res.trace.size(); ++i) {
        if (res.trace[i - 1].eta < pc.eta_max) continue;
        ++checked;
        worst_rise =
            std::max(worst_rise, res.trace[i].t - res.trace[i - 1].t);
    }
    report(11, res.converged && checked >= 1 && worst_rise <= 1e-6,
           "T non-increasing at eta_max over " + std::to_string(checked) +
           " steps (worst rise " + fmt(worst_rise) + ")");
}

// runs `planner compare` through cli_main into out_dir, returns exit code
int run_compare(const std::string& out_dir) {
    const std::vector<std::string> args = {
        "planner", "compare", "--config", CONFIG_DIR "/default.json",
        "--profile", "ci", "--seed", "1", "--out", out_dir};
    std::vector<char*> argv;
    for (const std::string& a : args)
        argv.push_back(const_cast<char*>(a.c_str()));
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    return json::parse(in);
}

// rows of a CSV file, split on commas, header dropped
std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string cell;
        std::vector<std::string> row;
        while (std::getline(ss, cell, ',')) row.push_back(cell);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string scrubbed(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream out;
    std::string line;
    while (std::getline(in, line)) {
        if (path.filename() == "summary.json" &&
            line.find("\"runtime_s\"") != std::string::npos)
            continue;
        out << line << "\n";
    }
    return out.str();
}

void end_to_end_suite() {
    const fs::path dir_a = fs::temp_directory_path() / "uavplan_accept_a";
    const fs::path dir_b = fs::temp_directory_path() / "uavplan_accept_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    const int rc_a = run_compare(dir_a.string());
    const int rc_b = run_compare(dir_b.string());

    RunConfig cfg = load_config(CONFIG_DIR "/default.json");
    apply_ci_profile(cfg);

    // criterion 7: proposed scheme end to end at the CI profile
    {
        const json summary = read_json(dir_a / "proposed" / "summary.json");
        const json mc = read_json(dir_a / "proposed" / "mc_report.json");
        const auto conv = read_csv(dir_a / "proposed" / "convergence.csv");
        const int iters = static_cast<int>(conv.size());
        const double t_final = std::stod(conv.back()[1]);
        const double slack_final = std::stod(conv.back()[3]);
        bool mc_ok = mc.at("per_gn").size() == 4;
        for (const json& gn : mc.at("per_gn"))
            mc_ok = mc_ok && gn.at("feasible").get<bool>();
        const double runtime = summary.at("runtime_s").get<double>();
        report(7,
               summary.at("converged").get<bool>() && iters <= 50 &&
                   slack_final <= 1e-6 * t_final && mc_ok && runtime <= 600.0,
               "proposed converged in " + std::to_string(iters) +
                   " iterations, slack/T " + fmt(slack_final / t_final) +
                   ", MC " + std::to_string(mc.at("per_gn").size()) +
                   "/4 GNs at R_min 2.4, " + fmt(runtime) + " s");
    }

    // criterion 8: AC infeasible at margin 0, slower once margin-repaired
    {
        const QuadratureGrid ac_grid = QuadratureGrid::average_channel();
        const OptimizeResult raw =
            run_algorithm1(cfg.scenario, cfg.env, ac_grid, cfg.penalty);
        const McReport mc0 =
            monte_carlo_validate(raw.plan, cfg.scenario, cfg.env, ac_grid,
                                 cfg.n_realizations, cfg.seed);
        int below = 0;
        for (int k = 0; k < cfg.scenario.num_gns(); ++k)
            if (mc0.mc_mean(k) < cfg.env.r_min) ++below;

        const json records = read_json(dir_a / "summary.json").at("records");
        double t_prop = 0, t_ac = 0, margin = 0;
        bool ac_feasible = false;
        for (const json& rec : records) {
            if (rec.at("scheme") == "proposed")
                t_prop = rec.at("completion_time").get<double>();
            if (rec.at("scheme") == "ac") {
                t_ac = rec.at("completion_time").get<double>();
                margin = rec.at("margin_used").get<double>();
                ac_feasible = rec.at("feasible_under_mc").get<bool>();
            }
        }
        report(8,
               below >= 1 && ac_feasible && t_ac >= t_prop - 1e-6,
               "AC margin 0: " + std::to_string(below) +
                   "/4 GNs below R_min; margin loop (margin " + fmt(margin) +
                   ") feasible with T_ac " + fmt(t_ac) + " vs T_proposed " +
                   fmt(t_prop));
    }

    // criterion 9: overestimation scatter
    {
        int ac_points = 0, prop_points = 0, bad = 0;
        for (const auto& row : read_csv(dir_a / "overestimation.csv")) {
            const double est = std::stod(row[2]);
            const double act = std::stod(row[3]);
            const double se = std::stod(row[4]);
            if (row[0] == "ac") {
                ++ac_points;
                if (!(est > act)) ++bad;
            } else if (row[0] == "proposed") {
                ++prop_points;
                if (!(est <= act + 3.0 * se)) ++bad;
            }
        }
        report(9, ac_points == 4 && prop_points == 4 && bad == 0,
               "overestimation region: " + std::to_string(ac_points) +
                   " AC points above the diagonal, " +
                   std::to_string(prop_points) +
                   " proposed points at/below within 3 sigma (" +
                   std::to_string(bad) + " violations)");
    }

    // criterion 10: parameter trends and scheme ordering
    {
        const QuadratureGrid grid = cfg.grid();
        const SweepResult sv =
            run_sweep(cfg.scenario, cfg.env, "v_max", {12.0, 16.0, 20.0},
                      {"proposed"}, grid, cfg.penalty, cfg.mc());
        const SweepResult sk =
            run_sweep(cfg.scenario, cfg.env, "k_rician", {10.0, 15.0, 20.0},
                      {"proposed"}, grid, cfg.penalty, cfg.mc());
        const bool v_ok = sv.trend_non_increasing.at("proposed");
        const bool k_ok = sk.trend_non_increasing.at("proposed");

        const json records = read_json(dir_a / "summary.json").at("records");
        double t_prop = 0;
        bool prop_conv = false;
        for (const json& rec : records)
            if (rec.at("scheme") == "proposed") {
                t_prop = rec.at("completion_time").get<double>();
                prop_conv = rec.at("converged").get<bool>();
            }
        std::string order_bad;
        for (const json& rec : records) {
            if (rec.at("scheme") == "proposed") continue;
            if (!prop_conv || !rec.at("converged").get<bool>()) continue;
            const double t = rec.at("completion_time").get<double>();
            if (t_prop > t + 1e-6)
                order_bad += " " + rec.at("scheme").get<std::string>() +
                             " T=" + fmt(t);
        }
        report(10, v_ok && k_ok && order_bad.empty(),
               "trends: T non-increasing in V_max " +
                   std::string(v_ok ? "yes" : "NO") + ", in K_R " +
                   std::string(k_ok ? "yes" : "NO") +
                   "; ordering vs T_proposed " + fmt(t_prop) +
                   (order_bad.empty() ? " holds" : " broken by" + order_bad));
    }

    // criterion 12: byte-identical repeated compare runs
    {
        int mismatches = 0, files = 0;
        std::string first_bad;
        for (const auto& entry : fs::recursive_directory_iterator(dir_a)) {
            if (!entry.is_regular_file()) continue;
            ++files;
            const fs::path rel = fs::relative(entry.path(), dir_a);
            const fs::path other = dir_b / rel;
            if (!fs::exists(other) ||
                scrubbed(entry.path()) != scrubbed(other)) {
                ++mismatches;
                if (first_bad.empty()) first_bad = rel.string();
            }
        }
        report(12, rc_a == rc_b && files > 0 && mismatches == 0,
               "determinism: " + std::to_string(files) + " files, " +
                   std::to_string(mismatches) + " mismatches" +
                   (first_bad.empty() ? "" : " (first: " + first_bad + ")"));
    }

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

} // namespace

int main() {
    bound_suite();       // criteria 1-3
    lemma1_identity();   // criterion 4
    lemma2_convexity();  // criterion 5
    bound_chain();       // criterion 6
    penalty_monotonicity(); // criterion 11
    end_to_end_suite();  // criteria 7-10, 12
    for (int id = 1; id <= 12; ++id)
        std::printf("%s\n", g_lines[id].c_str());
    std::printf("%d/12 criteria passed\n", 12 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
