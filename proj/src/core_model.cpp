#include "uavplan/core_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace uavplan {

namespace {
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
}

void EnvParams::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("EnvParams: ") + what);
    };
    require(a1 > 0 && a2 > 0, "a1, a2 must be positive");
    require(alpha_los < alpha_nlos, "alpha_los must be < alpha_nlos");
    require(beta_los > beta_nlos, "beta_los must be > beta_nlos");
    require(alpha_los >= 2 && alpha_los <= 6, "alpha_los outside [2, 6]");
    require(alpha_nlos >= 2 && alpha_nlos <= 6, "alpha_nlos outside [2, 6]");
    require(beta_los > 0 && beta_nlos > 0, "reference gains must be positive");
    require(p_tx > 0 && noise > 0, "powers must be positive");
    require(k_rician >= 0, "k_rician must be non-negative");
    require(sigma_db >= 0, "sigma_db must be non-negative");
    require(r_min >= 0, "r_min must be non-negative");
}

void Scenario::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("Scenario: ") + what);
    };
    require(!gns.empty(), "at least one GN required");
    for (const auto& w : gns) require(w.z() == 0.0, "GN altitude must be 0");
    require(v_max >= v_z && v_z > 0, "need v_max >= v_z > 0");
    require(delta_min > 0 && delta_min < delta_max, "need 0 < delta_min < delta_max");
    require(n_slots >= 1, "n_slots must be >= 1");
    require(h_min <= q_start.z() && q_start.z() <= h_max, "q_start altitude outside band");
    require(h_min <= q_end.z() && q_end.z() <= h_max, "q_end altitude outside band");
}

int DesignVars::scheduled_gn(int n) const {
    for (int k = 0; k < schedule.rows(); ++k)
        if (schedule(k, n - 1) > 0.5) return k;
    return -1;
}

bool ViolationReport::empty(double tol) const {
    return endpoint <= tol && altitude <= tol && mobility <= tol &&
           vertical <= tol && slot_bounds <= tol && schedule_range <= tol &&
           schedule_sum <= tol;
}

std::string ViolationReport::describe() const {
    std::ostringstream os;
    os << "endpoint=" << endpoint << " altitude=" << altitude
       << " mobility=" << mobility << " vertical=" << vertical
       << " slot_bounds=" << slot_bounds << " schedule_range=" << schedule_range
       << " schedule_sum=" << schedule_sum;
    return os.str();
}

double elevation_angle(const Vector3d& q, const Vector3d& w) {
    const double d = (q - w).norm();
    if (d <= 0.0) throw std::domain_error("elevation_angle: coincident points");
    return kRadToDeg * std::asin(q.z() / d);
}

double los_probability(double theta_deg, const EnvParams& env) {
    return 1.0 / (1.0 + env.a1 * std::exp(-env.a2 * (theta_deg - env.a1)));
}

ChannelDraw sample_channel(const Vector3d& q, const Vector3d& w,
                           const EnvParams& env, RandomSource& rng) {
    const double d = (q - w).norm();
    if (d <= 0.0) throw std::domain_error("sample_channel: degenerate distance");

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    ChannelDraw draw;
    const double theta = elevation_angle(q, w);
    draw.is_los = unif(rng) < los_probability(theta, env);

    if (draw.is_los) {
        // Rician: deterministic component of power K/(K+1) at a uniform
        // phase plus a CN(0, 1/(K+1)) scattered part.
        const double k = env.k_rician;
        const double phi = 2.0 * std::numbers::pi * unif(rng);
        const double los_amp = std::sqrt(k / (k + 1.0));
        const double scat = std::sqrt(0.5 / (k + 1.0));
        const double re = los_amp * std::cos(phi) + scat * normal(rng);
        const double im = los_amp * std::sin(phi) + scat * normal(rng);
        draw.g_los_power = re * re + im * im;
        draw.gain = draw.g_los_power * env.beta_los / std::pow(d, env.alpha_los);
    } else {
        // Rayleigh power is unit-mean exponential; shadowing is a
        // bias-corrected log-normal so E[nu] = 1.
        draw.g_nlos_power = -std::log1p(-unif(rng));
        const double delta_db = std::log(10.0) / 20.0 * env.sigma_db * env.sigma_db;
        const double x_db = env.sigma_db * normal(rng);
        draw.shadow = std::pow(10.0, (x_db - delta_db) / 10.0);
        draw.gain = draw.shadow * draw.g_nlos_power * env.beta_nlos /
                    std::pow(d, env.alpha_nlos);
    }
    return draw;
}

double instantaneous_se(double gain, const EnvParams& env) {
    return std::log2(1.0 + env.p_tx * gain / env.noise);
}

ViolationReport validate_design(const Scenario& sc, const DesignVars& vars,
                                double tol) {
    const int n_slots = sc.n_slots;
    const int k_gns = sc.num_gns();
    if (vars.schedule.rows() != k_gns || vars.schedule.cols() != n_slots ||
        static_cast<int>(vars.trajectory.size()) != n_slots + 1 ||
        vars.slots.size() != n_slots)
        throw std::invalid_argument("validate_design: dimension mismatch");

    ViolationReport rep;
    auto hit = [&](double& field, double violation) {
        if (violation > field) field = violation;
    };

    hit(rep.endpoint, (vars.trajectory.front() - sc.q_start).norm());
    hit(rep.endpoint, (vars.trajectory.back() - sc.q_end).norm());

    for (int n = 0; n <= n_slots; ++n) {
        const double z = vars.trajectory[n].z();
        hit(rep.altitude, sc.h_min - z);
        hit(rep.altitude, z - sc.h_max);
    }
    for (int n = 1; n <= n_slots; ++n) {
        const double delta = vars.slots(n - 1);
        const Vector3d step = vars.trajectory[n] - vars.trajectory[n - 1];
        // relative tolerance on the norm constraints via the tol*scale test
        hit(rep.mobility, step.norm() - sc.v_max * delta);
        hit(rep.vertical, std::abs(step.z()) - sc.v_z * delta);
        hit(rep.slot_bounds, sc.delta_min - delta);
        hit(rep.slot_bounds, delta - sc.delta_max);
    }
    for (int n = 0; n < n_slots; ++n) {
        double sum = 0;
        for (int k = 0; k < k_gns; ++k) {
            const double s = vars.schedule(k, n);
            hit(rep.schedule_range, -s);
            hit(rep.schedule_range, s - 1.0);
            sum += s;
        }
        hit(rep.schedule_sum, sum - 1.0);
    }

    // absorb floating-point noise on the scaled constraints
    const double scale = std::max({1.0, sc.v_max * sc.delta_max, sc.h_max});
    auto clip = [&](double& field) {
        if (field <= tol * scale) field = 0.0;
    };
    clip(rep.endpoint);
    clip(rep.altitude);
    clip(rep.mobility);
    clip(rep.vertical);
    clip(rep.slot_bounds);
    clip(rep.schedule_range);
    clip(rep.schedule_sum);
    return rep;
}

} // namespace uavplan
