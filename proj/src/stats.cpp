#include "uavplan/stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace uavplan {

namespace {

// Regularized lower incomplete gamma P(s, x): series for x < s + 1,
// Lentz continued fraction for the complement otherwise.
double gamma_p(double s, double x) {
    if (x <= 0.0) return 0.0;
    if (x < s + 1.0) {
        double ap = s;
        double sum = 1.0 / s;
        double del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
    }
    const double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    const double q = std::exp(-x + s * std::log(x) - std::lgamma(s)) * h;
    return 1.0 - q;
}

// Acklam's rational approximation to the standard normal quantile.
double normal_quantile_approx(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

} // namespace

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("std_normal_quantile: p must be in (0, 1)");
    double x = normal_quantile_approx(p);
    // one Halley step on the erfc-based CDF
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
    x -= u / (1.0 + x * u / 2.0);
    return x;
}

double exp_unit_quantile(double p) {
    if (!(p >= 0.0 && p < 1.0))
        throw std::domain_error("exp_unit_quantile: p must be in [0, 1)");
    return -std::log1p(-p);
}

double lognormal_shadow_quantile(double p, double sigma_db) {
    if (!(p >= 0.0 && p < 1.0))
        throw std::domain_error("lognormal_shadow_quantile: p must be in [0, 1)");
    if (p == 0.0) return 0.0;
    if (sigma_db == 0.0) return 1.0;
    const double delta_db = std::log(10.0) / 20.0 * sigma_db * sigma_db;
    return std::pow(10.0, (sigma_db * std_normal_quantile(p) - delta_db) / 10.0);
}

double rician_power_cdf(double x, double k) {
    if (x < 0.0 || k < 0.0)
        throw std::domain_error("rician_power_cdf: negative input");
    if (x == 0.0) return 0.0;
    const double b = (k + 1.0) * x; // central chi-square argument, halved dof

    // Poisson mixture sum_{i>=0} pois(i; k) * P(i + 1, b), anchored at the
    // Poisson mode so large K factors do not underflow.
    const int i0 = static_cast<int>(k);
    const double log_pois0 =
        (k > 0.0 ? i0 * std::log(k) : 0.0) - k - std::lgamma(i0 + 1.0);
    const double pois0 = std::exp(log_pois0);
    const double g0 = gamma_p(i0 + 1.0, b);
    const double log_b = b > 0.0 ? std::log(b) : -std::numeric_limits<double>::infinity();

    double cdf = pois0 * g0;

    // upward from the mode
    {
        double pois = pois0;
        double g = g0;
        // tb_i = e^{-b} b^i / i! at i = i0
        double tb = std::exp(i0 * log_b - b - std::lgamma(i0 + 1.0));
        for (int i = i0; i < i0 + 20000; ++i) {
            pois *= k / (i + 1.0);
            tb *= b / (i + 1.0);
            g -= tb;
            if (g < 0.0) g = 0.0;
            const double term = pois * g;
            cdf += term;
            if (pois < 1e-18 && i > k) break;
        }
    }
    // downward from the mode
    {
        double pois = pois0;
        double g = g0;
        double tb = std::exp(i0 * log_b - b - std::lgamma(i0 + 1.0));
        for (int i = i0; i > 0; --i) {
            pois *= i / k; // k > 0 whenever i0 > 0
            g += tb;
            if (g > 1.0) g = 1.0;
            tb *= i / b;
            cdf += pois * g;
            if (pois < 1e-18) break;
        }
    }
    return std::min(cdf, 1.0);
}

double rician_power_quantile(double p, double k) {
    if (!(p >= 0.0 && p < 1.0))
        throw std::domain_error("rician_power_quantile: p must be in [0, 1)");
    if (p == 0.0) return 0.0;

    double lo = 0.0;
    double hi = k + 1.0 + 40.0 * std::sqrt(2.0 * k + 1.0) / (2.0 * (k + 1.0));
    for (int tries = 0; rician_power_cdf(hi, k) < p; ++tries) {
        hi *= 2.0;
        if (tries > 60) throw SolverError("rician_power_quantile: bracket failure");
    }
    double mid = 0.5 * hi;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double c = rician_power_cdf(mid, k);
        if (std::abs(c - p) < 1e-12) break;
        (c < p ? lo : hi) = mid;
        if (hi - lo < 1e-15 * (1.0 + mid)) break;
    }
    return mid;
}

QuadratureGrid QuadratureGrid::average_channel() {
    QuadratureGrid g;
    g.gamma_los = {1.0};
    g.gamma_nlos = {1.0};
    g.gamma_shadow = {1.0};
    return g;
}

QuadratureGrid build_grids(int u_l, int u_n, int u_nu, const EnvParams& env) {
    if (u_l < 1 || u_n < 1 || u_nu < 1)
        throw std::domain_error("build_grids: counts must be >= 1");
    QuadratureGrid grid;
    grid.gamma_los.resize(u_l);
    grid.gamma_nlos.resize(u_n);
    grid.gamma_shadow.resize(u_nu);
    for (int u = 0; u < u_l; ++u)
        grid.gamma_los[u] = rician_power_quantile(double(u) / u_l, env.k_rician);
    for (int i = 0; i < u_n; ++i)
        grid.gamma_nlos[i] = exp_unit_quantile(double(i) / u_n);
    for (int j = 0; j < u_nu; ++j)
        grid.gamma_shadow[j] = lognormal_shadow_quantile(double(j) / u_nu, env.sigma_db);
    return grid;
}

} // namespace uavplan
