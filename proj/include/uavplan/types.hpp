#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace uavplan {

using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

/// Channel environment. All fields are linear-scale; dB-valued inputs are
/// converted once at config load.
struct EnvParams {
    double a1 = 12.08;       // sigmoid constant (dimensionless)
    double a2 = 0.114;       // sigmoid constant (1/degree)
    double alpha_los = 2.0;  // LoS path-loss exponent
    double alpha_nlos = 2.7; // NLoS path-loss exponent
    double beta_los = 1e-3;  // reference gain at 1 m, linear (-30 dB)
    double beta_nlos = 1e-4; // reference gain, linear (-40 dB)
    double p_tx = 1.0;       // GN transmit power, W (30 dBm)
    double noise = 1e-10;    // noise power, W (-70 dBm)
    double k_rician = 31.6227766016838; // Rician K-factor, linear (15 dB)
    double sigma_db = 10.0;  // shadowing std dev, dB
    double r_min = 2.4;      // minimum required SE, bps/Hz

    void validate() const;
};

/// Mission geometry and kinematics.
struct Scenario {
    std::vector<Vector3d> gns; // K ground positions, z = 0
    Vector3d q_start{0, 0, 100};
    Vector3d q_end{0, 0, 100};
    double h_min = 10.0;
    double h_max = 200.0;
    double v_max = 20.0; // max 3D speed, m/s
    double v_z = 10.0;   // max vertical speed, m/s
    int n_slots = 160;
    double delta_max = 0.5;
    double delta_min = 1e-5;

    int num_gns() const { return static_cast<int>(gns.size()); }
    void validate() const;
};

/// A candidate plan: schedule (K x N, binary after rounding), trajectory
/// (N+1 waypoints with q[0] = q_start, q[N] = q_end), slot durations (N).
struct DesignVars {
    MatrixXd schedule;
    std::vector<Vector3d> trajectory;
    VectorXd slots;

    double total_time() const { return slots.sum(); }
    /// GN scheduled in slot n (1-based slot index into [1, N]), or -1.
    int scheduled_gn(int n) const;
};

/// One realization of the stochastic channel.
struct ChannelDraw {
    bool is_los = false;
    double g_los_power = 0;  // |g^L|^2
    double g_nlos_power = 0; // |g^N|^2
    double shadow = 0;       // nu
    double gain = 0;         // resulting channel power gain h
};

/// Worst violation per constraint family, all non-negative; a design is
/// valid iff every entry is <= tol * scale.
struct ViolationReport {
    double endpoint = 0;     // |q[0]-q_start|, |q[N]-q_end|
    double altitude = 0;     // h_min/h_max band
    double mobility = 0;     // 3D speed
    double vertical = 0;     // vertical speed
    double slot_bounds = 0;  // delta_min/delta_max band
    double schedule_range = 0; // s outside [0,1]
    double schedule_sum = 0; // per-slot sum above 1

    bool empty(double tol = 1e-9) const;
    std::string describe() const;
};

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace uavplan
