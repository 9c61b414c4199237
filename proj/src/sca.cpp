#include "uavplan/sca.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "uavplan/core_model.hpp"
#include "uavplan/linprog.hpp"

namespace uavplan {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

SchedulingResult solve_scheduling_lp(const MatrixXd& rates, const VectorXd& slots,
                                     const EnvParams& env, double eta) {
    const int k_gns = static_cast<int>(rates.rows());
    const int n_slots = static_cast<int>(rates.cols());
    if (slots.size() != n_slots)
        throw std::invalid_argument("solve_scheduling_lp: dimension mismatch");
    const double total = slots.sum();
    if (total <= 0.0) throw std::invalid_argument("solve_scheduling_lp: zero total time");

    // variables: s_{k,n} (k-major), then rho
    const int n_vars = k_gns * n_slots + 1;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n_vars);
    c(n_vars - 1) = eta;

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_slots + k_gns, n_vars);
    Eigen::VectorXd b(n_slots + k_gns);
    for (int n = 0; n < n_slots; ++n) {
        for (int k = 0; k < k_gns; ++k) A(n, k * n_slots + n) = 1.0;
        b(n) = 1.0;
    }
    for (int k = 0; k < k_gns; ++k) {
        const int row = n_slots + k;
        for (int n = 0; n < n_slots; ++n)
            A(row, k * n_slots + n) = -slots(n) * rates(k, n) / total;
        A(row, n_vars - 1) = -1.0;
        b(row) = -env.r_min;
    }

    const LpSolution lp = simplex_solve(c, A, b);
    if (!lp.feasible || !lp.bounded)
        throw SolverError("solve_scheduling_lp: LP solve failed");

    SchedulingResult out;
    out.schedule.resize(k_gns, n_slots);
    for (int k = 0; k < k_gns; ++k)
        for (int n = 0; n < n_slots; ++n)
            out.schedule(k, n) = std::clamp(lp.x(k * n_slots + n), 0.0, 1.0);
    out.slack = std::max(0.0, lp.x(n_vars - 1));
    return out;
}

MatrixXd round_schedule(const MatrixXd& relaxed) {
    MatrixXd out = MatrixXd::Zero(relaxed.rows(), relaxed.cols());
    for (int n = 0; n < relaxed.cols(); ++n) {
        int best = -1;
        double best_val = 0;
        for (int k = 0; k < relaxed.rows(); ++k) {
            if (relaxed(k, n) > best_val + 1e-12) {
                best_val = relaxed(k, n);
                best = k; // strict improvement keeps the lowest-index tie-break
            }
        }
        if (best >= 0 && best_val >= 1e-6) out(best, n) = 1.0;
    }
    return out;
}

double update_lambda(const Vector3d& q, const Vector3d& w) {
    const double d = (q - w).norm();
    if (d <= 0.0) throw std::domain_error("update_lambda: zero distance");
    return std::sqrt(std::max(0.0, q.z())) / d;
}

double update_mu(double delta, double r_lb) {
    return delta * std::sqrt(std::max(0.0, r_lb));
}

double symmetric_nlos_sigmoid(double theta_lb, const EnvParams& env) {
    const double x_sym = env.a1 + std::log(env.a1) / env.a2;
    return 1.0 / (1.0 + env.a1 * std::exp(-env.a2 * (2.0 * x_sym - theta_lb - env.a1)));
}

double r_hat(const Vector3d& q, const Vector3d& w, double theta_lb,
             const SnrGrids& snr, const EnvParams& env) {
    const double d = (q - w).norm();
    if (d <= 0.0) throw std::domain_error("r_hat: zero distance");
    const double pl_l = std::pow(d, env.alpha_los);
    const double pl_n = std::pow(d, env.alpha_nlos);
    double se_l = 0, se_n = 0;
    for (double g : snr.snr_los) se_l += std::log2(1.0 + g / pl_l);
    for (double g : snr.snr_nlos) se_n += std::log2(1.0 + g / pl_n);
    se_l /= snr.snr_los.size();
    se_n /= snr.snr_nlos.size();
    return los_probability(theta_lb, env) * se_l +
           symmetric_nlos_sigmoid(theta_lb, env) * se_n;
}

ScaCoefficients compute_sca_coefficients(const std::vector<Vector3d>& q_prev,
                                         const MatrixXd& theta_lb_prev,
                                         const QuadratureGrid& grid,
                                         const EnvParams& env,
                                         const std::vector<Vector3d>& gns) {
    const int k_gns = static_cast<int>(gns.size());
    const int n_slots = static_cast<int>(theta_lb_prev.cols());
    if (theta_lb_prev.rows() != k_gns ||
        static_cast<int>(q_prev.size()) != n_slots + 1)
        throw std::invalid_argument("compute_sca_coefficients: dimension mismatch");

    const SnrGrids snr(grid, env);
    const int u_l = static_cast<int>(snr.snr_los.size());
    const int u_n_nu = static_cast<int>(snr.snr_nlos.size());
    const double log2e = std::numbers::log2e;

    ScaCoefficients co;
    co.n_gns = k_gns;
    co.n_slots = n_slots;
    co.psi_los.resize(static_cast<size_t>(k_gns) * n_slots * u_l);
    co.chi_los.resize(co.psi_los.size());
    co.psi_nlos.resize(static_cast<size_t>(k_gns) * n_slots * u_n_nu);
    co.chi_nlos.resize(co.psi_nlos.size());
    co.x_los_prev.resize(k_gns, n_slots);
    co.x_nlos_prev.resize(k_gns, n_slots);
    co.y_prev.resize(k_gns, n_slots);
    co.r_hat_prev.resize(k_gns, n_slots);
    co.psi_los_sum.resize(k_gns, n_slots);
    co.psi_nlos_sum.resize(k_gns, n_slots);
    co.chi_sum.resize(k_gns, n_slots);

    const double x_sym = env.a1 + std::log(env.a1) / env.a2;
    for (int k = 0; k < k_gns; ++k) {
        for (int n = 1; n <= n_slots; ++n) {
            const double theta = theta_lb_prev(k, n - 1);
            if (theta < 0.0 || theta > 90.0)
                throw std::domain_error(
                    "compute_sca_coefficients: anchor angle outside [0, 90]");
            const double y = (q_prev[n] - gns[k]).squaredNorm();
            if (y <= 0.0)
                throw std::domain_error("compute_sca_coefficients: zero distance");
            const double xl = 1.0 + env.a1 * std::exp(-env.a2 * (theta - env.a1));
            const double xn =
                1.0 + env.a1 * std::exp(-env.a2 * (2.0 * x_sym - theta - env.a1));
            co.x_los_prev(k, n - 1) = xl;
            co.x_nlos_prev(k, n - 1) = xn;
            co.y_prev(k, n - 1) = y;

            const double pl_l = std::pow(y, env.alpha_los / 2.0);
            const double pl_n = std::pow(y, env.alpha_nlos / 2.0);
            double se_l = 0, se_n = 0, psi_l = 0, psi_n = 0, chi = 0;
            for (int u = 0; u < u_l; ++u) {
                const double gamma = snr.snr_los[u];
                const double lg = std::log2(1.0 + gamma / pl_l);
                const double ch =
                    env.alpha_los * gamma * log2e / (2.0 * y * (pl_l + gamma)) / xl;
                co.psi_los[(static_cast<size_t>(k) * n_slots + n - 1) * u_l + u] =
                    lg / (xl * xl);
                co.chi_los[(static_cast<size_t>(k) * n_slots + n - 1) * u_l + u] = ch;
                se_l += lg;
                psi_l += lg / (xl * xl);
                chi += ch / u_l;
            }
            for (int ij = 0; ij < u_n_nu; ++ij) {
                const double gamma = snr.snr_nlos[ij];
                const double lg = std::log2(1.0 + gamma / pl_n);
                const double ch =
                    env.alpha_nlos * gamma * log2e / (2.0 * y * (pl_n + gamma)) / xn;
                co.psi_nlos[(static_cast<size_t>(k) * n_slots + n - 1) * u_n_nu + ij] =
                    lg / (xn * xn);
                co.chi_nlos[(static_cast<size_t>(k) * n_slots + n - 1) * u_n_nu + ij] =
                    ch;
                se_n += lg;
                psi_n += lg / (xn * xn);
                chi += ch / u_n_nu;
            }
            co.r_hat_prev(k, n - 1) = se_l / (xl * u_l) + se_n / (xn * u_n_nu);
            co.psi_los_sum(k, n - 1) = psi_l / u_l;
            co.psi_nlos_sum(k, n - 1) = psi_n / u_n_nu;
            co.chi_sum(k, n - 1) = chi;
        }
    }
    return co;
}

double r_hat_lb(const Vector3d& q, const Vector3d& w, double theta_lb,
                const ScaCoefficients& co, int k, int n, const EnvParams& env,
                double x_sym) {
    const double xl = 1.0 + env.a1 * std::exp(-env.a2 * (theta_lb - env.a1));
    const double xn =
        1.0 + env.a1 * std::exp(-env.a2 * (2.0 * x_sym - theta_lb - env.a1));
    const double y = (q - w).squaredNorm();
    return co.r_hat_prev(k, n - 1) -
           co.psi_los_sum(k, n - 1) * (xl - co.x_los_prev(k, n - 1)) -
           co.psi_nlos_sum(k, n - 1) * (xn - co.x_nlos_prev(k, n - 1)) -
           co.chi_sum(k, n - 1) * (y - co.y_prev(k, n - 1));
}

// ---------------------------------------------------------------------------
// SP2-1 interior-point solver
// ---------------------------------------------------------------------------

namespace {

struct ScheduledSlot {
    int m; // index into theta/t vectors
    int k; // GN
    int n; // slot, 1-based
};

class TrajectorySolver {
public:
    TrajectorySolver(const Scenario& sc, const EnvParams& env,
                     const MatrixXd& schedule, const ScaState& state,
                     const QuadratureGrid& grid, const TrajectoryOptions& opts)
        : sc_(sc), env_(env), schedule_(schedule), state_(state), opts_(opts),
          coeffs_(compute_sca_coefficients(state.q_prev, state.theta_lb_prev,
                                           grid, env, sc.gns)) {
        dropped_.assign(sc.num_gns() * sc.n_slots, 0);
        build_varmap();
        int guard = 0;
        while (!build_initial_point()) {
            if (++guard > static_cast<int>(dropped_.size()))
                throw SolverError("solve_trajectory_subproblem: cannot build a "
                                  "feasible start after dropping dead slots");
            build_varmap();
        }
        build_constraints();
    }

    SubproblemSolution solve();

private:
    struct Con {
        enum Kind { kLin, kMob, kAngle, kEpi, kRate } kind = kLin;
        std::vector<int> vars;    // kLin
        std::vector<double> coefs;
        double c0 = 0;
        int slot = 0;  // kMob / kAngle / kEpi, 1-based
        int m = -1;    // scheduled-slot index
        int gn = -1;   // kAngle / kEpi / kRate
        double A = 0, B = 0, lam = 0;         // kAngle
        double psi_l = 0, psi_n = 0, c_q = 0; // kEpi
    };

    const Scenario& sc_;
    const EnvParams& env_;
    const MatrixXd& schedule_;
    const ScaState& state_;
    TrajectoryOptions opts_;
    ScaCoefficients coeffs_;

    int n_slots_ = 0;
    std::vector<char> dropped_; // (k, n-1) pairs excluded from the rate terms
    std::vector<ScheduledSlot> sched_;
    std::vector<std::array<int, 3>> qidx_; // N+1 entries, -1 = fixed
    std::vector<int> didx_;                // slot n -> didx_[n-1], -1 = fixed
    std::vector<int> thidx_, tidx_;
    int rho_idx_ = -1;
    int n_vars_ = 0;

    // current iterate: packed vector plus unpacked views
    VectorXd x_;
    std::vector<Vector3d> q_;
    VectorXd delta_;
    std::vector<double> theta_, tvar_;
    double rho_ = 0;

    std::vector<Con> cons_;

    void build_varmap();
    bool build_initial_point();
    void build_constraints();
    void sync_from_packed();
    void set_x(const VectorXd& x) {
        x_ = x;
        sync_from_packed();
    }

    double objective() const { return delta_.sum() + state_.eta * rho_; }

    double eval_con(const Con& c) const;
    void grad_con(const Con& c, std::vector<std::pair<int, double>>& out) const;
    void hess_con(const Con& c, double w, MatrixXd& h) const;

    double xl_of(double theta) const {
        return 1.0 + env_.a1 * std::exp(-env_.a2 * (theta - env_.a1));
    }
    double xn_of(double theta) const {
        return 1.0 +
               env_.a1 * std::exp(-env_.a2 * (2.0 * state_.x_sym - theta - env_.a1));
    }
    double rhat_lb_at(int m) const {
        const auto& s = sched_[m];
        return r_hat_lb(q_[s.n], sc_.gns[s.k], theta_[m], coeffs_, s.k, s.n, env_,
                        state_.x_sym);
    }
};

void TrajectorySolver::build_varmap() {
    n_slots_ = sc_.n_slots;
    const int k_gns = sc_.num_gns();
    if (schedule_.rows() != k_gns || schedule_.cols() != n_slots_)
        throw std::invalid_argument("solve_trajectory_subproblem: schedule shape");
    if (static_cast<int>(state_.q_prev.size()) != n_slots_ + 1)
        throw std::invalid_argument("solve_trajectory_subproblem: anchor shape");

    sched_.clear();
    for (int n = 1; n <= n_slots_; ++n) {
        for (int k = 0; k < k_gns; ++k) {
            if (schedule_(k, n - 1) > 0.5) {
                // a slot with no rate headroom at the anchor has no strict
                // interior for its epigraph; it contributes nothing anyway
                if (coeffs_.r_hat_prev(k, n - 1) <= 1e-9 ||
                    dropped_[k * n_slots_ + n - 1])
                    break;
                sched_.push_back({static_cast<int>(sched_.size()), k, n});
                break;
            }
        }
    }

    int next = 0;
    qidx_.assign(n_slots_ + 1, {-1, -1, -1});
    for (int n = 1; n < n_slots_; ++n) {
        if (opts_.freeze_trajectory) continue;
        qidx_[n][0] = next++;
        qidx_[n][1] = next++;
        qidx_[n][2] = opts_.fix_altitude ? -1 : next++;
    }

    didx_.assign(n_slots_, -1);
    if (opts_.common_slot) {
        const int shared = next++;
        for (int n = 0; n < n_slots_; ++n) didx_[n] = shared;
    } else if (opts_.freeze_trajectory) {
        // travel slots pinned; hover slots free
        for (int n = 1; n <= n_slots_; ++n) {
            const double len = (state_.q_prev[n] - state_.q_prev[n - 1]).norm();
            if (len <= 1e-12) didx_[n - 1] = next++;
        }
    } else {
        for (int n = 0; n < n_slots_; ++n) didx_[n] = next++;
    }

    thidx_.resize(sched_.size());
    tidx_.resize(sched_.size());
    for (size_t m = 0; m < sched_.size(); ++m) {
        thidx_[m] = next++;
        tidx_[m] = next++;
    }
    rho_idx_ = next++;
    n_vars_ = next;
}

bool TrajectorySolver::build_initial_point() {
    const double z_margin = 1e-7 * (sc_.h_max - sc_.h_min);

    q_ = state_.q_prev;
    if (opts_.fix_altitude)
        for (int n = 1; n < n_slots_; ++n) q_[n].z() = sc_.h_min;
    else if (!opts_.freeze_trajectory)
        for (int n = 1; n < n_slots_; ++n)
            q_[n].z() = std::clamp(q_[n].z(), sc_.h_min + z_margin,
                                   sc_.h_max - z_margin);

    auto needed = [&](int n) {
        const Vector3d d = q_[n] - q_[n - 1];
        return std::max(d.norm() / sc_.v_max, std::abs(d.z()) / sc_.v_z);
    };

    // nudge free waypoints toward their neighbors until every slot fits; the
    // step is tiny so an anchor at the speed limit keeps its geometry
    for (int pass = 0;; ++pass) {
        bool ok = true;
        for (int n = 1; n <= n_slots_ && ok; ++n)
            if (didx_[n - 1] >= 0 && needed(n) >= sc_.delta_max * (1.0 - 1e-8))
                ok = false;
        if (ok) break;
        if (opts_.freeze_trajectory || pass >= 400)
            throw std::domain_error("solve_trajectory_subproblem: cannot build a "
                                    "strictly feasible start from the anchor");
        const double w = pass < 200 ? 1e-6 : 0.05;
        for (int n = 1; n < n_slots_; ++n) {
            const Vector3d mid = 0.5 * (q_[n - 1] + q_[n + 1]);
            q_[n].head<2>() = (1.0 - w) * q_[n].head<2>() + w * mid.head<2>();
            if (!opts_.fix_altitude)
                q_[n].z() = std::clamp((1.0 - w) * q_[n].z() + w * mid.z(),
                                       sc_.h_min + z_margin, sc_.h_max - z_margin);
        }
    }

    delta_.resize(n_slots_);
    const double d_lo = sc_.delta_min * (1.0 + 1e-6) + 1e-12;
    const double d_hi = sc_.delta_max * (1.0 - 1e-9);
    if (opts_.common_slot) {
        double need = 0;
        for (int n = 1; n <= n_slots_; ++n) need = std::max(need, needed(n));
        const double base = state_.delta_prev.size() == n_slots_
                                ? state_.delta_prev(0)
                                : 0.5 * (sc_.delta_min + sc_.delta_max);
        double d0 = std::max({1.05 * need, d_lo, std::min(base, d_hi)});
        if (d0 > d_hi) d0 = 0.5 * (need + sc_.delta_max);
        if (d0 <= need || d0 < sc_.delta_min || d0 > d_hi)
            throw std::domain_error("solve_trajectory_subproblem: no strictly "
                                    "feasible common slot length");
        delta_.setConstant(d0);
    } else {
        const bool warm = state_.delta_prev.size() == n_slots_;
        for (int n = 1; n <= n_slots_; ++n) {
            const double need = needed(n);
            if (didx_[n - 1] < 0) { // pinned travel slot
                delta_(n - 1) = std::max(need, sc_.delta_min);
                if (delta_(n - 1) > sc_.delta_max * (1.0 + 1e-9))
                    throw std::domain_error("solve_trajectory_subproblem: pinned "
                                            "slot duration exceeds delta_max");
                continue;
            }
            const double base = warm ? state_.delta_prev(n - 1)
                                     : 0.25 * (sc_.delta_min + sc_.delta_max);
            double d0 = std::max({1.0000001 * need, d_lo, std::min(base, d_hi)});
            if (d0 > d_hi) d0 = 0.5 * (need + sc_.delta_max);
            delta_(n - 1) = d0;
        }
    }

    // angle bounds: start near the anchor, backed off until the linearized
    // sine constraint is strict
    theta_.resize(sched_.size());
    tvar_.resize(sched_.size());
    for (const auto& s : sched_) {
        const double theta_true = elevation_angle(q_[s.n], sc_.gns[s.k]);
        double th = std::min({state_.theta_lb_prev(s.k, s.n - 1),
                              theta_true * (1.0 - 1e-7), 90.0 * (1.0 - 1e-9)});
        th = std::max(th, 1e-9);
        const double lam = state_.lambda(s.k, s.n - 1);
        const double theta_prev = state_.theta_lb_prev(s.k, s.n - 1);
        const double cp = std::cos(kDegToRad * theta_prev);
        const double a0 =
            std::sin(kDegToRad * theta_prev) - kDegToRad * cp * theta_prev;
        const double b0 = kDegToRad * cp;
        const double rhs = 2.0 * lam * std::sqrt(q_[s.n].z()) -
                           lam * lam * (q_[s.n] - sc_.gns[s.k]).norm();
        int guard = 0;
        while (a0 + b0 * th >= rhs - 1e-12 && guard++ < 200) th *= 0.7;
        if (a0 + b0 * th >= rhs) {
            dropped_[s.k * n_slots_ + s.n - 1] = 1;
            return false;
        }
        theta_[s.m] = th;
    }
    for (const auto& s : sched_) {
        double ub = rhat_lb_at(s.m);
        if (ub <= 1e-12) {
            // bisect theta back toward the anchor to recover rate headroom,
            // staying strictly inside the linearized sine constraint
            const double lam = state_.lambda(s.k, s.n - 1);
            const double theta_prev = state_.theta_lb_prev(s.k, s.n - 1);
            const double cp = std::cos(kDegToRad * theta_prev);
            const double a0 =
                std::sin(kDegToRad * theta_prev) - kDegToRad * cp * theta_prev;
            const double b0 = kDegToRad * cp;
            const double rhs = 2.0 * lam * std::sqrt(q_[s.n].z()) -
                               lam * lam * (q_[s.n] - sc_.gns[s.k]).norm();
            double lo = theta_[s.m];
            double hi = std::min(theta_prev,
                                 (rhs - a0) / b0 - 1e-9 * (1.0 + std::abs(rhs)));
            if (hi < lo) hi = lo;
            for (int it = 0; it < 80 && ub <= 1e-12; ++it) {
                theta_[s.m] = 0.5 * (lo + hi);
                ub = rhat_lb_at(s.m);
                if (ub <= 1e-12) lo = theta_[s.m];
            }
            if (ub <= 1e-12) {
                dropped_[s.k * n_slots_ + s.n - 1] = 1;
                return false;
            }
        }
        tvar_[s.m] = ub * (1.0 - 1e-4);
    }

    // slack large enough to cover every rate shortfall strictly
    double worst = 0;
    for (int k = 0; k < sc_.num_gns(); ++k) {
        double lhs = 0;
        for (const auto& s : sched_)
            if (s.k == k) {
                const double mu = state_.mu(s.k, s.n - 1);
                lhs += 2.0 * mu * std::sqrt(tvar_[s.m]) - mu * mu / delta_(s.n - 1);
            }
        worst = std::max(worst, env_.r_min * delta_.sum() - lhs);
    }
    rho_ = std::max(1e-6, 1.1 * worst + 1e-3);

    // pack
    x_.resize(n_vars_);
    for (int n = 1; n < n_slots_; ++n)
        for (int c = 0; c < 3; ++c)
            if (qidx_[n][c] >= 0) x_(qidx_[n][c]) = q_[n](c);
    for (int n = 0; n < n_slots_; ++n)
        if (didx_[n] >= 0) x_(didx_[n]) = delta_(n);
    for (size_t m = 0; m < sched_.size(); ++m) {
        x_(thidx_[m]) = theta_[m];
        x_(tidx_[m]) = tvar_[m];
    }
    x_(rho_idx_) = rho_;
    return true;
}

void TrajectorySolver::sync_from_packed() {
    for (int n = 1; n < n_slots_; ++n)
        for (int c = 0; c < 3; ++c)
            if (qidx_[n][c] >= 0) q_[n](c) = x_(qidx_[n][c]);
    for (int n = 0; n < n_slots_; ++n)
        if (didx_[n] >= 0) delta_(n) = x_(didx_[n]);
    for (size_t m = 0; m < sched_.size(); ++m) {
        theta_[m] = x_(thidx_[m]);
        tvar_[m] = x_(tidx_[m]);
    }
    rho_ = x_(rho_idx_);
}

void TrajectorySolver::build_constraints() {
    auto lin1 = [&](int var, double coef, double c0) {
        if (var < 0) return;
        Con c;
        c.kind = Con::kLin;
        c.vars = {var};
        c.coefs = {coef};
        c.c0 = c0;
        cons_.push_back(std::move(c));
    };

    if (opts_.common_slot) {
        lin1(didx_[0], -1.0, sc_.delta_min);
        lin1(didx_[0], 1.0, -sc_.delta_max);
    } else {
        for (int n = 0; n < n_slots_; ++n) {
            lin1(didx_[n], -1.0, sc_.delta_min);
            lin1(didx_[n], 1.0, -sc_.delta_max);
        }
    }
    for (int n = 1; n < n_slots_; ++n) {
        lin1(qidx_[n][2], -1.0, sc_.h_min);
        lin1(qidx_[n][2], 1.0, -sc_.h_max);
    }
    for (int n = 1; n <= n_slots_; ++n) {
        const bool q_free = qidx_[n][0] >= 0 || qidx_[n - 1][0] >= 0 ||
                            qidx_[n][2] >= 0 || qidx_[n - 1][2] >= 0;
        const bool d_free = didx_[n - 1] >= 0;
        if (q_free || d_free) {
            Con c;
            c.kind = Con::kMob;
            c.slot = n;
            cons_.push_back(std::move(c));
        }
        // vertical speed: +-(z[n] - z[n-1]) - v_z * delta[n] <= 0
        const bool z_free = qidx_[n][2] >= 0 || qidx_[n - 1][2] >= 0;
        if (z_free || d_free) {
            for (double sgn : {1.0, -1.0}) {
                Con c;
                c.kind = Con::kLin;
                auto add = [&](int var, double coef, double fixed_val) {
                    if (var >= 0) {
                        c.vars.push_back(var);
                        c.coefs.push_back(coef);
                    } else {
                        c.c0 += coef * fixed_val;
                    }
                };
                add(qidx_[n][2], sgn, q_[n].z());
                add(qidx_[n - 1][2], -sgn, q_[n - 1].z());
                add(didx_[n - 1], -sc_.v_z, delta_(n - 1));
                if (!c.vars.empty()) cons_.push_back(std::move(c));
            }
        }
    }
    for (const auto& s : sched_) {
        const double theta_prev = state_.theta_lb_prev(s.k, s.n - 1);
        Con a;
        a.kind = Con::kAngle;
        a.slot = s.n;
        a.m = s.m;
        a.gn = s.k;
        a.lam = state_.lambda(s.k, s.n - 1);
        const double cp = std::cos(kDegToRad * theta_prev);
        a.A = std::sin(kDegToRad * theta_prev) - kDegToRad * cp * theta_prev;
        a.B = kDegToRad * cp;
        cons_.push_back(std::move(a));

        lin1(thidx_[s.m], -1.0, 0.0);
        lin1(thidx_[s.m], 1.0, -90.0);
        lin1(tidx_[s.m], -1.0, 0.0);

        Con e;
        e.kind = Con::kEpi;
        e.slot = s.n;
        e.m = s.m;
        e.gn = s.k;
        e.psi_l = coeffs_.psi_los_sum(s.k, s.n - 1);
        e.psi_n = coeffs_.psi_nlos_sum(s.k, s.n - 1);
        e.c_q = coeffs_.chi_sum(s.k, s.n - 1);
        cons_.push_back(std::move(e));
    }
    for (int k = 0; k < sc_.num_gns(); ++k) {
        Con c;
        c.kind = Con::kRate;
        c.gn = k;
        cons_.push_back(std::move(c));
    }
    lin1(rho_idx_, -1.0, 0.0);
}

double TrajectorySolver::eval_con(const Con& c) const {
    switch (c.kind) {
        case Con::kLin: {
            double g = c.c0;
            for (size_t i = 0; i < c.vars.size(); ++i)
                g += c.coefs[i] * x_(c.vars[i]);
            return g;
        }
        case Con::kMob: {
            const int n = c.slot;
            const Vector3d d = q_[n] - q_[n - 1];
            const double del = delta_(n - 1);
            return d.squaredNorm() / del - sc_.v_max * sc_.v_max * del;
        }
        case Con::kAngle: {
            const Vector3d& qn = q_[c.slot];
            const Vector3d& w = sc_.gns[c.gn];
            return c.A + c.B * theta_[c.m] - 2.0 * c.lam * std::sqrt(qn.z()) +
                   c.lam * c.lam * (qn - w).norm();
        }
        case Con::kEpi: {
            const int k = c.gn, n = c.slot;
            const double y = (q_[n] - sc_.gns[k]).squaredNorm();
            return tvar_[c.m] - coeffs_.r_hat_prev(k, n - 1) +
                   c.psi_l * (xl_of(theta_[c.m]) - coeffs_.x_los_prev(k, n - 1)) +
                   c.psi_n * (xn_of(theta_[c.m]) - coeffs_.x_nlos_prev(k, n - 1)) +
                   c.c_q * (y - coeffs_.y_prev(k, n - 1));
        }
        case Con::kRate: {
            double g = env_.r_min * delta_.sum() - rho_;
            for (const auto& s : sched_) {
                if (s.k != c.gn) continue;
                const double mu = state_.mu(s.k, s.n - 1);
                g -= 2.0 * mu * std::sqrt(tvar_[s.m]) - mu * mu / delta_(s.n - 1);
            }
            return g;
        }
    }
    return 0;
}

void TrajectorySolver::grad_con(const Con& c,
                                std::vector<std::pair<int, double>>& out) const {
    out.clear();
    switch (c.kind) {
        case Con::kLin:
            for (size_t i = 0; i < c.vars.size(); ++i)
                out.emplace_back(c.vars[i], c.coefs[i]);
            break;
        case Con::kMob: {
            const int n = c.slot;
            const Vector3d d = q_[n] - q_[n - 1];
            const double del = delta_(n - 1);
            for (int cc = 0; cc < 3; ++cc) {
                if (qidx_[n][cc] >= 0) out.emplace_back(qidx_[n][cc], 2.0 * d(cc) / del);
                if (qidx_[n - 1][cc] >= 0)
                    out.emplace_back(qidx_[n - 1][cc], -2.0 * d(cc) / del);
            }
            if (didx_[n - 1] >= 0)
                out.emplace_back(didx_[n - 1],
                                 -d.squaredNorm() / (del * del) -
                                     sc_.v_max * sc_.v_max);
            break;
        }
        case Con::kAngle: {
            const int n = c.slot;
            const Vector3d& qn = q_[n];
            const Vector3d u = (qn - sc_.gns[c.gn]).normalized();
            out.emplace_back(thidx_[c.m], c.B);
            for (int cc = 0; cc < 3; ++cc) {
                if (qidx_[n][cc] < 0) continue;
                double g = c.lam * c.lam * u(cc);
                if (cc == 2) g += -c.lam / std::sqrt(qn.z());
                out.emplace_back(qidx_[n][cc], g);
            }
            break;
        }
        case Con::kEpi: {
            const int n = c.slot;
            const double xl = xl_of(theta_[c.m]);
            const double xn = xn_of(theta_[c.m]);
            out.emplace_back(tidx_[c.m], 1.0);
            out.emplace_back(thidx_[c.m], c.psi_l * (-env_.a2) * (xl - 1.0) +
                                              c.psi_n * env_.a2 * (xn - 1.0));
            for (int cc = 0; cc < 3; ++cc)
                if (qidx_[n][cc] >= 0)
                    out.emplace_back(qidx_[n][cc],
                                     2.0 * c.c_q * (q_[n](cc) - sc_.gns[c.gn](cc)));
            break;
        }
        case Con::kRate: {
            for (int n = 0; n < n_slots_; ++n)
                if (didx_[n] >= 0) out.emplace_back(didx_[n], env_.r_min);
            for (const auto& s : sched_) {
                if (s.k != c.gn) continue;
                const double mu = state_.mu(s.k, s.n - 1);
                out.emplace_back(tidx_[s.m], -mu / std::sqrt(tvar_[s.m]));
                if (didx_[s.n - 1] >= 0)
                    out.emplace_back(didx_[s.n - 1],
                                     -mu * mu / (delta_(s.n - 1) * delta_(s.n - 1)));
            }
            out.emplace_back(rho_idx_, -1.0);
            break;
        }
    }
}

void TrajectorySolver::hess_con(const Con& c, double w, MatrixXd& h) const {
    switch (c.kind) {
        case Con::kLin:
            break;
        case Con::kMob: {
            const int n = c.slot;
            const Vector3d d = q_[n] - q_[n - 1];
            const double del = delta_(n - 1);
            const int dvar = didx_[n - 1];
            for (int cc = 0; cc < 3; ++cc) {
                const int ia = qidx_[n][cc], ib = qidx_[n - 1][cc];
                if (ia >= 0) h(ia, ia) += w * 2.0 / del;
                if (ib >= 0) h(ib, ib) += w * 2.0 / del;
                if (ia >= 0 && ib >= 0) {
                    h(ia, ib) -= w * 2.0 / del;
                    h(ib, ia) -= w * 2.0 / del;
                }
                if (dvar >= 0) {
                    const double cross = -2.0 * d(cc) / (del * del);
                    if (ia >= 0) {
                        h(ia, dvar) += w * cross;
                        h(dvar, ia) += w * cross;
                    }
                    if (ib >= 0) {
                        h(ib, dvar) -= w * cross;
                        h(dvar, ib) -= w * cross;
                    }
                }
            }
            if (dvar >= 0)
                h(dvar, dvar) += w * 2.0 * d.squaredNorm() / (del * del * del);
            break;
        }
        case Con::kAngle: {
            const int n = c.slot;
            const Vector3d& qn = q_[n];
            const Vector3d diff = qn - sc_.gns[c.gn];
            const double r = diff.norm();
            const Vector3d u = diff / r;
            for (int a = 0; a < 3; ++a) {
                const int ia = qidx_[n][a];
                if (ia < 0) continue;
                for (int b = 0; b < 3; ++b) {
                    const int ib = qidx_[n][b];
                    if (ib < 0) continue;
                    double v = c.lam * c.lam * ((a == b ? 1.0 : 0.0) - u(a) * u(b)) / r;
                    if (a == 2 && b == 2)
                        v += 0.5 * c.lam / (qn.z() * std::sqrt(qn.z()));
                    h(ia, ib) += w * v;
                }
            }
            break;
        }
        case Con::kEpi: {
            const int n = c.slot;
            const double xl = xl_of(theta_[c.m]);
            const double xn = xn_of(theta_[c.m]);
            const int it = thidx_[c.m];
            h(it, it) += w * env_.a2 * env_.a2 *
                         (c.psi_l * (xl - 1.0) + c.psi_n * (xn - 1.0));
            for (int cc = 0; cc < 3; ++cc)
                if (qidx_[n][cc] >= 0)
                    h(qidx_[n][cc], qidx_[n][cc]) += w * 2.0 * c.c_q;
            break;
        }
        case Con::kRate: {
            for (const auto& s : sched_) {
                if (s.k != c.gn) continue;
                const double mu = state_.mu(s.k, s.n - 1);
                const double t = tvar_[s.m];
                h(tidx_[s.m], tidx_[s.m]) += w * 0.5 * mu / (t * std::sqrt(t));
                if (didx_[s.n - 1] >= 0) {
                    const double del = delta_(s.n - 1);
                    h(didx_[s.n - 1], didx_[s.n - 1]) +=
                        w * 2.0 * mu * mu / (del * del * del);
                }
            }
            break;
        }
    }
}

SubproblemSolution TrajectorySolver::solve() {
    const int m_cons = static_cast<int>(cons_.size());
    std::vector<double> g(m_cons);
    auto eval_all = [&](bool* strict) {
        *strict = true;
        for (int i = 0; i < m_cons; ++i) {
            g[i] = eval_con(cons_[i]);
            if (!(g[i] < 0.0)) *strict = false;
        }
    };

    bool strict = false;
    eval_all(&strict);
    if (!strict) {
        std::string what = "solve_trajectory_subproblem: initial point not "
                           "strictly feasible:";
        for (int i = 0; i < m_cons; ++i)
            if (!(g[i] < 0.0))
                what += " kind=" + std::to_string(cons_[i].kind) +
                        " slot=" + std::to_string(cons_[i].slot) +
                        " g=" + std::to_string(g[i]);
        throw SolverError(what);
    }

    auto barrier = [&]() {
        double phi = 0;
        for (int i = 0; i < m_cons; ++i) phi -= std::log(-g[i]);
        return phi;
    };

    // start with the barrier comparable to the scaled objective so the first
    // stages actually center; a large eta otherwise drowns the barrier
    double tau = std::clamp(m_cons / std::max(1e-3, objective()), 1e-6, 1e3);
    // beyond gap ~1e-7 the per-constraint margins drop under double roundoff
    // and the barrier gradient turns into noise
    const double gap_tol = 1e-7;
    const int max_newton = 80;
    const VectorXd x_start = x_;
    const double merit_start = objective();

    VectorXd grad(n_vars_);
    MatrixXd hess(n_vars_, n_vars_);
    std::vector<std::pair<int, double>> entries;
    VectorXd dense_grad = VectorXd::Zero(n_vars_);
    std::vector<char> seen(n_vars_, 0);
    std::vector<int> touched;
    touched.reserve(n_vars_);

    double final_grad_norm = 0;

    while (true) {
        for (int it = 0; it < max_newton; ++it) {
            // gradient and Hessian of tau * f0 + phi
            grad.setZero();
            hess.setZero();
            for (int n = 0; n < n_slots_; ++n)
                if (didx_[n] >= 0) grad(didx_[n]) += tau;
            grad(rho_idx_) += tau * state_.eta;

            for (int i = 0; i < m_cons; ++i) {
                const double gi = g[i];
                grad_con(cons_[i], entries);
                // compress duplicates into a dense scratch gradient
                touched.clear();
                for (const auto& [idx, val] : entries) {
                    if (!seen[idx]) {
                        seen[idx] = 1;
                        touched.push_back(idx);
                    }
                    dense_grad(idx) += val;
                }
                const double inv = 1.0 / (-gi);
                for (int a : touched) {
                    const double ga = dense_grad(a);
                    grad(a) += ga * inv;
                    for (int b : touched)
                        hess(a, b) += ga * dense_grad(b) * inv * inv;
                }
                hess_con(cons_[i], inv, hess);
                for (int a : touched) {
                    dense_grad(a) = 0.0;
                    seen[a] = 0;
                }
            }

            Eigen::LDLT<MatrixXd> ldlt(hess);
            VectorXd step = -ldlt.solve(grad);
            double decrement = -grad.dot(step);
            if (!std::isfinite(decrement) || decrement < 0) {
                hess.diagonal().array() +=
                    1e-10 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
                ldlt.compute(hess);
                step = -ldlt.solve(grad);
                decrement = -grad.dot(step);
                if (!std::isfinite(decrement) || decrement < 0)
                    throw SolverError("solve_trajectory_subproblem: Newton step "
                                      "failed (indefinite system)");
            }
            final_grad_norm = grad.lpNorm<Eigen::Infinity>();
            if (decrement / 2.0 <
                1e-14 * std::max(1.0, tau * std::abs(objective())))
                break;

            const double merit0 = tau * objective() + barrier();
            const VectorXd x0 = x_;
            double alpha = 1.0;
            bool feasible_step = false;
            for (int ls = 0; ls < 200; ++ls) {
                set_x(x0 + alpha * step);
                eval_all(&strict);
                if (strict) {
                    feasible_step = true;
                    break;
                }
                alpha *= 0.7;
            }
            if (!feasible_step) {
                set_x(x0);
                eval_all(&strict);
                break;
            }
            // inside the quadratic-convergence region the damped step always
            // makes progress; an Armijo test there only drowns in rounding
            // noise of the merit value
            if (decrement >= 0.0625) {
                bool accepted = false;
                for (int ls = 0; ls < 80; ++ls) {
                    if (strict) {
                        const double merit = tau * objective() + barrier();
                        if (merit <= merit0 - 0.01 * alpha * decrement +
                                         1e-12 * std::abs(merit0)) {
                            accepted = true;
                            break;
                        }
                    }
                    alpha *= 0.6;
                    set_x(x0 + alpha * step);
                    eval_all(&strict);
                }
                if (!accepted) {
                    set_x(x0);
                    eval_all(&strict);
                    break; // no further progress at this barrier stage
                }
            }
        }
        if (static_cast<double>(m_cons) / tau < gap_tol) break;
        tau *= 10.0;
    }

    // the start point is itself feasible; never return anything worse
    if (objective() > merit_start) set_x(x_start);

    SubproblemSolution sol;
    sol.trajectory = q_;
    sol.slots = delta_;
    sol.theta_lb = state_.theta_lb_prev;
    for (const auto& s : sched_) sol.theta_lb(s.k, s.n - 1) = theta_[s.m];
    sol.slack = rho_;
    sol.objective = objective();
    sol.kkt_residual = final_grad_norm / tau;
    return sol;
}

} // namespace

SubproblemSolution solve_trajectory_subproblem(const Scenario& sc,
                                               const EnvParams& env,
                                               const MatrixXd& schedule,
                                               const ScaState& state,
                                               const QuadratureGrid& grid,
                                               const TrajectoryOptions& opts) {
    TrajectorySolver solver(sc, env, schedule, state, grid, opts);
    return solver.solve();
}

} // namespace uavplan
