#pragma once

#include <cstdint>
#include <random>

#include "uavplan/types.hpp"

namespace uavplan {

using RandomSource = std::mt19937_64;

/// Elevation angle in degrees, (180/pi) * asin(q.z / |q - w|).
double elevation_angle(const Vector3d& q, const Vector3d& w);

/// Sigmoid LoS probability 1 / (1 + a1 * exp(-a2 * (theta - a1))).
double los_probability(double theta_deg, const EnvParams& env);

/// Draws the LoS state, fading powers, shadowing, and the resulting mixed
/// channel power gain for the link q -> w.
ChannelDraw sample_channel(const Vector3d& q, const Vector3d& w,
                           const EnvParams& env, RandomSource& rng);

/// log2(1 + p_tx * gain / noise).
double instantaneous_se(double gain, const EnvParams& env);

/// Checks all hard constraints of a plan against the scenario.
ViolationReport validate_design(const Scenario& sc, const DesignVars& vars,
                                double tol = 1e-9);

} // namespace uavplan
