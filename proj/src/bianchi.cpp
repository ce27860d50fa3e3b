#include "wifiload/bianchi.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "wifiload/errors.hpp"

namespace wifiload {

namespace {

// sum_{j=0}^{m-1} (2p)^j, the cofactor of (1 - 2p) in 1 - (2p)^m.
double geometric_sum_2p(double p, int m) {
    double base = 2.0 * p;
    double term = 1.0;
    double sum = 0.0;
    for (int i = 0; i < m; ++i) {
        sum += term;
        term *= base;
    }
    return sum;
}

// f(p) extended by its analytic limit f(0+) = 1, for internal bracketing.
double f_extended(double p, const ProtocolParams& params) {
    if (p <= 0.0) return 1.0;
    double t = tau_of_p(p, params);
    return 1.0 + std::log1p(-p) / std::log1p(-t);
}

}  // namespace

void ProtocolParams::validate() const {
    if (cw_min < 2)
        throw ConfigError("protocol.cw_min must be >= 2, got " +
                          std::to_string(cw_min));
    if (max_stage < 0)
        throw ConfigError("protocol.max_stage must be >= 0, got " +
                          std::to_string(max_stage));
    if (!(t_success_us > 0.0) || !(t_collision_us > 0.0) || !(t_idle_us > 0.0))
        throw ConfigError("protocol sub-frame durations must all be > 0");
}

double clamp_probability(double p) {
    if (!(p > kProbFloor)) return kProbFloor;
    if (p > kProbCeil) return kProbCeil;
    return p;
}

double tau_of_p(double p, const ProtocolParams& params) {
    if (!(p >= 0.0) || p >= 1.0)
        throw std::domain_error("tau_of_p: p must be in [0,1), got " +
                                std::to_string(p));
    double g = params.cw_min;
    // The textbook form 2(1-2p) / [(1-2p)(g+1) + p g (1-(2p)^m)] has a
    // removable singularity at p = 1/2. Dividing the common factor (1-2p)
    // out of both terms leaves an expression that is exact everywhere and
    // evaluates to the analytic limit 4/(2g+2+mg) at the singular point.
    double den = (g + 1.0) + p * g * geometric_sum_2p(p, params.max_stage);
    return 2.0 / den;
}

double users_of_p(double p, const ProtocolParams& params) {
    if (!(p > 0.0) || p >= 1.0)
        throw std::domain_error("users_of_p: p must be in (0,1), got " +
                                std::to_string(p));
    double t = tau_of_p(p, params);
    return 1.0 + std::log1p(-p) / std::log1p(-t);
}

double users_of_p_clamped(double p, const ProtocolParams& params) {
    return users_of_p(clamp_probability(p), params);
}

double collision_of_users(double n, const ProtocolParams& params) {
    if (!(n >= 1.0))
        throw std::domain_error("collision_of_users: n must be >= 1, got " +
                                std::to_string(n));
    if (n == 1.0) return 0.0;

    constexpr double tol = 1e-9;
    double lo = 0.0;
    double hi = kProbCeil;
    // Extend the bracket toward 1 when the target lies above f(p_max).
    while (f_extended(hi, params) < n) {
        double next = 1.0 - (1.0 - hi) / 16.0;
        if (next <= hi || next >= 1.0)
            throw std::runtime_error(
                "collision_of_users: no representable p reaches n = " +
                std::to_string(n));
        hi = next;
    }

    double mid = 0.5 * (lo + hi);
    for (int i = 0; i < 200; ++i) {
        mid = 0.5 * (lo + hi);
        double fm = f_extended(mid, params);
        if (std::fabs(fm - n) <= tol) return mid;
        if (fm < n)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= hi * 1e-17) break;
    }
    // Bracket collapsed to machine precision: accept a relaxed residual
    // (df/dp grows without bound toward p=1).
    double fm = f_extended(mid, params);
    if (std::fabs(fm - n) <= 1e-6 * n) return mid;
    throw std::runtime_error("collision_of_users: no convergence at n = " +
                             std::to_string(n));
}

double collision_slope(double n, const ProtocolParams& params, double delta) {
    if (!(n >= 1.0))
        throw std::domain_error("collision_slope: n must be >= 1, got " +
                                std::to_string(n));
    if (!(delta > 0.0))
        throw std::domain_error("collision_slope: delta must be > 0");
    double lo = n - delta;
    if (lo < 1.0) lo = 1.0;  // one-sided at the n = 1 boundary
    double hi = n + delta;
    return (collision_of_users(hi, params) - collision_of_users(lo, params)) /
           (hi - lo);
}

ModelPoint model_point_for_users(double n, const ProtocolParams& params) {
    ModelPoint pt;
    pt.n = n;
    pt.p = collision_of_users(n, params);
    pt.tau = tau_of_p(pt.p, params);
    return pt;
}

}  // namespace wifiload
