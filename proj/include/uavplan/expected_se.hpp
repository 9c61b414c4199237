#pragma once

#include <cstdint>

#include "uavplan/core_model.hpp"
#include "uavplan/stats.hpp"

namespace uavplan {

/// Per-slot expected-SE estimate split into its LoS/NLoS conditional parts.
struct SeBreakdown {
    double p_los = 0;
    double se_los = 0;   // bps/Hz, conditional on LoS
    double se_nlos = 0;  // bps/Hz, conditional on NLoS
    double se_total = 0; // p_los * se_los + (1 - p_los) * se_nlos
};

struct OracleEstimate {
    double mean = 0;
    double stderr_ = 0;
    std::int64_t n_draws = 0;
};

/// Precomputed SNR-scaled quantile grids: Gamma^L_u = p_tx*beta_los*gamma^L_u
/// / noise and the outer product Gamma^N_{i,j}. Built once per (grid, env);
/// per-slot evaluation then costs one log per entry.
struct SnrGrids {
    std::vector<double> snr_los;  // U_L entries
    std::vector<double> snr_nlos; // U_N * U_nu entries, flattened
    SnrGrids() = default;
    SnrGrids(const QuadratureGrid& grid, const EnvParams& env);
};

/// Conservative quadrature lower bound on the expected SE at distance
/// |q - w|, left-endpoint rule on all three CDF grids.
SeBreakdown se_lower_bound(const Vector3d& q, const Vector3d& w,
                           const QuadratureGrid& grid, const EnvParams& env);

/// Same, with the SNR grids prebuilt.
SeBreakdown se_lower_bound(const Vector3d& q, const Vector3d& w,
                           const SnrGrids& snr, const EnvParams& env);

/// Average-channel approximation: SE at the mean channel gain.
SeBreakdown se_avg_channel(const Vector3d& q, const Vector3d& w,
                           const EnvParams& env);

/// Monte Carlo estimate of the true expected SE; deterministic per seed.
OracleEstimate se_expected_oracle(const Vector3d& q, const Vector3d& w,
                                  const EnvParams& env, std::int64_t n_draws,
                                  std::uint64_t seed);

/// Time-averaged rate per GN: R_k = (1/T) sum_n s_k[n] delta[n] se[k][n].
VectorXd achieved_rate(const DesignVars& vars, const MatrixXd& per_slot_se);

} // namespace uavplan
