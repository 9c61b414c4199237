#include "uavplan/expected_se.hpp"

#include <cmath>

#include "uavplan/parallel.hpp"

namespace uavplan {

SnrGrids::SnrGrids(const QuadratureGrid& grid, const EnvParams& env) {
    const double scale_l = env.p_tx * env.beta_los / env.noise;
    const double scale_n = env.p_tx * env.beta_nlos / env.noise;
    snr_los.resize(grid.u_l());
    for (int u = 0; u < grid.u_l(); ++u)
        snr_los[u] = scale_l * grid.gamma_los[u];
    snr_nlos.resize(static_cast<size_t>(grid.u_n()) * grid.u_nu());
    size_t idx = 0;
    for (int i = 0; i < grid.u_n(); ++i)
        for (int j = 0; j < grid.u_nu(); ++j)
            snr_nlos[idx++] = scale_n * grid.gamma_nlos[i] * grid.gamma_shadow[j];
}

SeBreakdown se_lower_bound(const Vector3d& q, const Vector3d& w,
                           const QuadratureGrid& grid, const EnvParams& env) {
    return se_lower_bound(q, w, SnrGrids(grid, env), env);
}

SeBreakdown se_lower_bound(const Vector3d& q, const Vector3d& w,
                           const SnrGrids& snr, const EnvParams& env) {
    const double d = (q - w).norm();
    if (d <= 0.0) throw std::domain_error("se_lower_bound: zero distance");

    SeBreakdown out;
    out.p_los = los_probability(elevation_angle(q, w), env);

    const double pl_l = std::pow(d, env.alpha_los);
    double acc = 0;
    for (double g : snr.snr_los) acc += std::log2(1.0 + g / pl_l);
    out.se_los = acc / snr.snr_los.size();

    const double pl_n = std::pow(d, env.alpha_nlos);
    acc = 0;
    for (double g : snr.snr_nlos) acc += std::log2(1.0 + g / pl_n);
    out.se_nlos = acc / snr.snr_nlos.size();

    out.se_total = out.p_los * out.se_los + (1.0 - out.p_los) * out.se_nlos;
    return out;
}

SeBreakdown se_avg_channel(const Vector3d& q, const Vector3d& w,
                           const EnvParams& env) {
    const double d = (q - w).norm();
    if (d <= 0.0) throw std::domain_error("se_avg_channel: zero distance");

    SeBreakdown out;
    out.p_los = los_probability(elevation_angle(q, w), env);
    out.se_los = std::log2(1.0 + env.p_tx * env.beta_los /
                                     (env.noise * std::pow(d, env.alpha_los)));
    out.se_nlos = std::log2(1.0 + env.p_tx * env.beta_nlos /
                                      (env.noise * std::pow(d, env.alpha_nlos)));
    out.se_total = out.p_los * out.se_los + (1.0 - out.p_los) * out.se_nlos;
    return out;
}

OracleEstimate se_expected_oracle(const Vector3d& q, const Vector3d& w,
                                  const EnvParams& env, std::int64_t n_draws,
                                  std::uint64_t seed) {
    if (n_draws < 2) throw std::invalid_argument("se_expected_oracle: n_draws < 2");

    // Fixed-size blocks with per-block seeding; block sums are reduced in
    // index order, so the estimate is independent of the worker count.
    constexpr std::int64_t kBlock = 4096;
    const std::int64_t n_blocks = (n_draws + kBlock - 1) / kBlock;
    std::vector<double> sums(n_blocks, 0.0), sqsums(n_blocks, 0.0);

    parallel_for(n_blocks, [&](std::int64_t b) {
        RandomSource rng(seed + static_cast<std::uint64_t>(b) * 0x9e3779b97f4a7c15ull);
        const std::int64_t lo = b * kBlock;
        const std::int64_t hi = std::min(n_draws, lo + kBlock);
        double s = 0, s2 = 0;
        for (std::int64_t i = lo; i < hi; ++i) {
            const double se = instantaneous_se(sample_channel(q, w, env, rng).gain, env);
            s += se;
            s2 += se * se;
        }
        sums[b] = s;
        sqsums[b] = s2;
    });

    double sum = 0, sqsum = 0;
    for (std::int64_t b = 0; b < n_blocks; ++b) {
        sum += sums[b];
        sqsum += sqsums[b];
    }
    OracleEstimate est;
    est.n_draws = n_draws;
    est.mean = sum / n_draws;
    const double var =
        std::max(0.0, (sqsum - n_draws * est.mean * est.mean) / (n_draws - 1));
    est.stderr_ = std::sqrt(var / n_draws);
    return est;
}

VectorXd achieved_rate(const DesignVars& vars, const MatrixXd& per_slot_se) {
    const double total = vars.slots.sum();
    if (total <= 0.0) throw std::domain_error("achieved_rate: zero total time");
    if (per_slot_se.rows() != vars.schedule.rows() ||
        per_slot_se.cols() != vars.schedule.cols())
        throw std::invalid_argument("achieved_rate: dimension mismatch");

    VectorXd rate = VectorXd::Zero(vars.schedule.rows());
    for (int k = 0; k < vars.schedule.rows(); ++k)
        for (int n = 0; n < vars.schedule.cols(); ++n)
            rate(k) += vars.schedule(k, n) * vars.slots(n) * per_slot_se(k, n);
    return rate / total;
}

} // namespace uavplan
