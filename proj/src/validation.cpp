#include "uavplan/validation.hpp"

#include <cmath>

#include "uavplan/baselines.hpp"
#include "uavplan/parallel.hpp"

namespace uavplan {

namespace {

constexpr std::uint64_t kSeedStride = 0x9e3779b97f4a7c15ULL;
constexpr std::int64_t kBlockSize = 256;

} // namespace

bool McReport::all_feasible() const {
    for (bool f : feasible)
        if (!f) return false;
    return true;
}

McReport monte_carlo_validate(const DesignVars& plan, const Scenario& sc,
                              const EnvParams& env, const QuadratureGrid& grid,
                              std::int64_t n, std::uint64_t seed) {
    // tolerance admits plans round-tripped through 9-significant-digit CSV
    if (!validate_design(sc, plan, 1e-5).empty())
        throw std::domain_error("monte_carlo_validate: invalid plan");
    if (n < 1) throw std::domain_error("monte_carlo_validate: n < 1");
    const int k_gns = sc.num_gns();
    const double total = plan.total_time();

    // scheduled slots only; everything else contributes zero rate
    struct Link {
        int k, n;
        double weight; // delta / T
    };
    std::vector<Link> links;
    for (int slot = 1; slot <= sc.n_slots; ++slot) {
        const int k = plan.scheduled_gn(slot);
        if (k >= 0 && plan.slots(slot - 1) > 0)
            links.push_back({k, slot, plan.slots(slot - 1) / total});
    }

    // fixed-size realization blocks with per-block seeds keep the estimate
    // independent of the worker count
    const std::int64_t n_blocks = (n + kBlockSize - 1) / kBlockSize;
    MatrixXd block_sum = MatrixXd::Zero(k_gns, n_blocks);
    MatrixXd block_sumsq = MatrixXd::Zero(k_gns, n_blocks);
    parallel_for(n_blocks, [&](std::int64_t b) {
        RandomSource rng(seed + static_cast<std::uint64_t>(b) * kSeedStride);
        const std::int64_t lo = b * kBlockSize;
        const std::int64_t hi = std::min(n, lo + kBlockSize);
        VectorXd rate(k_gns);
        for (std::int64_t r = lo; r < hi; ++r) {
            rate.setZero();
            for (const Link& l : links) {
                const ChannelDraw draw = sample_channel(
                    plan.trajectory[l.n], sc.gns[l.k], env, rng);
                rate(l.k) += l.weight * instantaneous_se(draw.gain, env);
            }
            for (int k = 0; k < k_gns; ++k) {
                block_sum(k, b) += rate(k);
                block_sumsq(k, b) += rate(k) * rate(k);
            }
        }
    });

    McReport rep;
    rep.n_realizations = n;
    rep.seed = seed;
    rep.mc_mean = block_sum.rowwise().sum() / static_cast<double>(n);
    rep.mc_stderr = VectorXd::Zero(k_gns);
    if (n >= 2) {
        const VectorXd sumsq = block_sumsq.rowwise().sum();
        for (int k = 0; k < k_gns; ++k) {
            const double var = std::max(
                0.0, (sumsq(k) - n * rep.mc_mean(k) * rep.mc_mean(k)) /
                         static_cast<double>(n - 1));
            rep.mc_stderr(k) = std::sqrt(var / static_cast<double>(n));
        }
    }

    const SnrGrids snr(grid, env);
    MatrixXd se(k_gns, sc.n_slots);
    for (int k = 0; k < k_gns; ++k)
        for (int slot = 1; slot <= sc.n_slots; ++slot)
            se(k, slot - 1) =
                se_lower_bound(plan.trajectory[slot], sc.gns[k], snr, env)
                    .se_total;
    rep.estimated = achieved_rate(plan, se);

    rep.feasible.resize(k_gns);
    for (int k = 0; k < k_gns; ++k)
        rep.feasible[k] =
            rep.mc_mean(k) >= env.r_min - 1.96 * rep.mc_stderr(k);
    return rep;
}

std::vector<OverestimationPoint> overestimation_report(
    const std::vector<SchemePlan>& plans, const Scenario& sc,
    const EnvParams& env, std::int64_t n, std::uint64_t seed) {
    std::vector<OverestimationPoint> out;
    for (const SchemePlan& sp : plans) {
        const McReport rep = monte_carlo_validate(
            sp.plan, sc, env, QuadratureGrid::average_channel(), n, seed);
        for (int k = 0; k < sc.num_gns(); ++k)
            out.push_back({sp.scheme, k, sp.estimated(k), rep.mc_mean(k),
                           rep.mc_stderr(k)});
    }
    return out;
}

SweepResult run_sweep(const Scenario& sc, const EnvParams& env,
                      const std::string& parameter,
                      const std::vector<double>& values,
                      const std::vector<std::string>& schemes,
                      const QuadratureGrid& grid, const PenaltyConfig& config,
                      const McConfig& mc) {
    if (values.empty())
        throw std::invalid_argument("run_sweep: empty value list");
    SweepResult out;
    out.parameter = parameter;
    out.values = values;
    for (const std::string& scheme : schemes) {
        for (double v : values) {
            Scenario s2 = sc;
            EnvParams e2 = env;
            if (parameter == "v_max")
                s2.v_max = v;
            else if (parameter == "k_rician")
                e2.k_rician = std::pow(10.0, v / 10.0);
            else if (parameter == "r_min")
                e2.r_min = v;
            else
                throw std::invalid_argument("run_sweep: unknown parameter " +
                                            parameter);
            SweepRecord rec;
            rec.scheme = scheme;
            rec.value = v;
            try {
                const BaselineResult r =
                    run_scheme(scheme, s2, e2, grid, config, mc);
                rec.completion_time = r.completion_time;
                rec.converged = r.converged;
                rec.feasible = r.feasible_under_mc;
                rec.error = r.error;
            } catch (const std::exception& ex) {
                rec.error = ex.what();
            }
            out.records.push_back(std::move(rec));
        }
    }
    for (const std::string& scheme : schemes) {
        bool ok = true;
        double prev = 0;
        bool have_prev = false;
        for (const SweepRecord& rec : out.records) {
            if (rec.scheme != scheme || !rec.error.empty()) continue;
            if (have_prev && rec.completion_time > prev * 1.02) ok = false;
            prev = rec.completion_time;
            have_prev = true;
        }
        out.trend_non_increasing[scheme] = ok;
    }
    return out;
}

} // namespace uavplan
