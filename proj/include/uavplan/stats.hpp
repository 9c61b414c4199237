#pragma once

#include <vector>

#include "uavplan/types.hpp"

namespace uavplan {

/// Left-endpoint quantile grids of the three channel randomness sources,
/// built by uniformly partitioning each CDF range.
struct QuadratureGrid {
    std::vector<double> gamma_los;    // Rician power quantiles
    std::vector<double> gamma_nlos;   // unit-mean exponential quantiles
    std::vector<double> gamma_shadow; // bias-corrected log-normal quantiles

    int u_l() const { return static_cast<int>(gamma_los.size()); }
    int u_n() const { return static_cast<int>(gamma_nlos.size()); }
    int u_nu() const { return static_cast<int>(gamma_shadow.size()); }

    /// Grid whose single points sit at the unit mean of every source; the
    /// lower-bound machinery evaluated on it reproduces the average-channel
    /// SE exactly.
    static QuadratureGrid average_channel();
};

/// Standard normal quantile, absolute error <= 1e-9 on (0, 1).
double std_normal_quantile(double p);

/// Unit-mean exponential quantile -ln(1 - p), for p in [0, 1).
double exp_unit_quantile(double p);

/// Quantile of the bias-corrected log-normal shadowing gain; p = 0 maps to 0.
double lognormal_shadow_quantile(double p, double sigma_db);

/// CDF of the Rician fading power |g^L|^2, i.e. 1 - Q1(sqrt(2k),
/// sqrt(2(k+1)x)); computed as a Poisson mixture of central chi-square terms.
double rician_power_cdf(double x, double k);

/// Inverse of rician_power_cdf by bracketing + bisection, absolute tolerance
/// 1e-10 in probability; p = 0 maps to 0.
double rician_power_quantile(double p, double k);

/// Builds the three left-endpoint grids at sizes (u_l, u_n, u_nu).
QuadratureGrid build_grids(int u_l, int u_n, int u_nu, const EnvParams& env);

} // namespace uavplan
