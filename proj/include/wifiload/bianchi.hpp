#pragma once

// Bianchi DCF model relations between the per-slot transmission probability
// tau, the conditional collision probability p, and the competing-user count
// n, for saturated stations with binary exponential backoff.

namespace wifiload {

struct ProtocolParams {
    int cw_min = 32;       // initial contention window size G (slots)
    int max_stage = 3;     // maximum backoff stage m
    double t_success_us = 192.58;   // duration of a successful sub-frame
    double t_collision_us = 45.58;  // duration of a collided sub-frame
    double t_idle_us = 20.0;        // duration of an empty sub-frame

    // Throws ConfigError if G < 2, m < 0 or any duration is not positive.
    void validate() const;
};

// A mutually consistent (tau, p, n) triple.
struct ModelPoint {
    double tau = 0.0;  // per-slot transmission probability, in (0,1)
    double p = 0.0;    // conditional collision probability, in [0,1)
    double n = 1.0;    // real-valued user count, >= 1
};

// Measurement clamp bounds used by the lenient paths: finite windows can
// produce p_hat of exactly 0 or 1 where f is singular.
inline constexpr double kProbFloor = 1e-4;
inline constexpr double kProbCeil = 0.999;

// Clamps a raw probability measurement into [kProbFloor, kProbCeil].
double clamp_probability(double p);

// Transmission probability tau as a function of the conditional collision
// probability p. Branches to the analytic limit 4/(2G + 2 + mG) at the
// removable singularity p = 1/2. Throws std::domain_error outside [0,1).
double tau_of_p(double p, const ProtocolParams& params);

// User count f(p) = 1 + log(1-p)/log(1-tau(p)). Strictly increasing.
// Throws std::domain_error for p <= 0 or p >= 1.
double users_of_p(double p, const ProtocolParams& params);

// Lenient variant: clamps p into [kProbFloor, kProbCeil] first.
double users_of_p_clamped(double p, const ProtocolParams& params);

// Inverse of users_of_p: the unique p in [0,1) with f(p) = n, by bisection.
// |f(p) - n| <= 1e-9 at return (relaxed to 1e-6*n if the bracket collapses
// to machine precision first). Throws std::domain_error for n < 1 and
// std::runtime_error if no representable p reaches n.
double collision_of_users(double n, const ProtocolParams& params);

// Central-difference slope of collision_of_users at n. The stencil is
// clamped to [max(1, n-delta), n+delta] so the slope is defined everywhere
// estimators can reach (n_est is clamped to >= 1). Positive for all n >= 1.
double collision_slope(double n, const ProtocolParams& params,
                       double delta = 1e-3);

// The consistent triple (tau(h(n)), h(n), n).
ModelPoint model_point_for_users(double n, const ProtocolParams& params);

}  // namespace wifiload
