#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "wifiload/bianchi.hpp"
#include "wifiload/errors.hpp"

using namespace wifiload;

namespace {
const ProtocolParams kDefaults;
}

TEST_CASE("tau_of_p matches the closed form and its limit") {
    CHECK(tau_of_p(0.0, kDefaults) == doctest::Approx(oracle::kTauAt0).epsilon(1e-12));
    CHECK(tau_of_p(0.25, kDefaults) ==
          doctest::Approx(oracle::kTauAt025).epsilon(1e-12));
    CHECK(tau_of_p(0.75, kDefaults) ==
          doctest::Approx(oracle::kTauAt075).epsilon(1e-12));

    // Removable singularity: the branch value is the analytic limit and the
    // function is continuous across it.
    double at_half = tau_of_p(0.5, kDefaults);
    CHECK(at_half == doctest::Approx(oracle::kTauLimitAtHalf).epsilon(1e-12));
    CHECK(std::abs(tau_of_p(0.5 - 1e-6, kDefaults) - at_half) < 1e-6);
    CHECK(std::abs(tau_of_p(0.5 + 1e-6, kDefaults) - at_half) < 1e-6);

    CHECK_THROWS_AS(tau_of_p(-0.01, kDefaults), std::domain_error);
    CHECK_THROWS_AS(tau_of_p(1.0, kDefaults), std::domain_error);
}

TEST_CASE("users_of_p matches frozen references") {
    CHECK(users_of_p(1e-4, kDefaults) ==
          doctest::Approx(oracle::kUsersAtFloor).epsilon(1e-12));
    CHECK(users_of_p(0.1, kDefaults) ==
          doctest::Approx(oracle::kUsersAt01).epsilon(1e-12));
    CHECK(users_of_p(0.3, kDefaults) ==
          doctest::Approx(oracle::kUsersAt03).epsilon(1e-12));
    CHECK(users_of_p(0.5, kDefaults) ==
          doctest::Approx(oracle::kUsersAt05).epsilon(1e-12));
    CHECK(users_of_p(0.75, kDefaults) ==
          doctest::Approx(oracle::kUsersAt075).epsilon(1e-12));
    CHECK(users_of_p(0.999, kDefaults) ==
          doctest::Approx(oracle::kUsersAtCeil).epsilon(1e-12));

    // f(p) -> 1 as p -> 0+.
    CHECK(users_of_p(1e-9, kDefaults) == doctest::Approx(1.0).epsilon(1e-6));

    CHECK_THROWS_AS(users_of_p(0.0, kDefaults), std::domain_error);
    CHECK_THROWS_AS(users_of_p(-0.1, kDefaults), std::domain_error);
    CHECK_THROWS_AS(users_of_p(1.0, kDefaults), std::domain_error);
}

TEST_CASE("users_of_p is strictly increasing and continuous at 1/2") {
    double prev = users_of_p(0.01, kDefaults);
    for (double p = 0.02; p < 0.999; p += 0.01) {
        double cur = users_of_p(p, kDefaults);
        CHECK(cur > prev);
        prev = cur;
    }
    double mid = users_of_p(0.5, kDefaults);
    CHECK(std::abs(mid - users_of_p(0.5 - 1e-7, kDefaults)) <= 1e-3);
    CHECK(std::abs(mid - users_of_p(0.5 + 1e-7, kDefaults)) <= 1e-3);
}

TEST_CASE("collision_of_users matches frozen references") {
    CHECK(collision_of_users(1.0, kDefaults) == 0.0);
    for (const auto& row : oracle::kCollisionTable)
        CHECK(std::abs(collision_of_users(row.n, kDefaults) - row.p) <= 1e-9);
    CHECK(collision_of_users(30.0, kDefaults) >
          collision_of_users(10.0, kDefaults));
    CHECK_THROWS_AS(collision_of_users(0.5, kDefaults), std::domain_error);
}

TEST_CASE("collision_of_users agrees with damped fixed-point iteration") {
    // Independent solution route: iterate p <- (p + 1-(1-tau(p))^(n-1))/2,
    // the Eq. (1)+(2) fixed point, instead of bisecting f.
    for (double n : {10.0, 30.0}) {
        double p = 0.3;
        for (int i = 0; i < 10000; ++i) {
            double t = tau_of_p(p, kDefaults);
            p = 0.5 * (p + (1.0 - std::pow(1.0 - t, n - 1.0)));
        }
        CHECK(std::abs(collision_of_users(n, kDefaults) - p) <= 1e-8);
    }
}

TEST_CASE("round trip f(h(n)) over integer n") {
    for (int n = 2; n <= 50; ++n) {
        double p = collision_of_users(static_cast<double>(n), kDefaults);
        CHECK(std::abs(users_of_p(p, kDefaults) - n) <= 1e-6);
        // Eq. (2) residual: p = 1 - (1-tau)^(n-1) at the solution.
        double tau = tau_of_p(p, kDefaults);
        CHECK(std::abs(p - (1.0 - std::pow(1.0 - tau, n - 1.0))) <= 1e-8);
    }
}

TEST_CASE("collision_slope is positive, decreasing, and accurate") {
    double s2 = collision_slope(2.0, kDefaults);
    double s40 = collision_slope(40.0, kDefaults);
    CHECK(s2 > s40);
    for (double n : {2.0, 5.0, 10.0, 20.0, 40.0})
        CHECK(collision_slope(n, kDefaults) > 0.0);

    // Against the analytic derivative of the inverse function.
    for (const auto& row : oracle::kSlopeTable) {
        double cd = collision_slope(row.n, kDefaults);
        CHECK(std::abs(cd - row.slope) / row.slope < 1e-4);
    }

    // Against a 4th-order finite difference built from the library's own h.
    auto h = [](double n) { return collision_of_users(n, kDefaults); };
    double d = 1e-3;
    for (double n : {5.0, 10.0, 25.0}) {
        double order4 = (-h(n + 2 * d) + 8 * h(n + d) - 8 * h(n - d) +
                         h(n - 2 * d)) /
                        (12 * d);
        double cd = collision_slope(n, kDefaults);
        CHECK(std::abs(cd - order4) / order4 < 1e-4);
    }

    // Defined down to the estimator clamp boundary n = 1.
    CHECK(collision_slope(1.0, kDefaults) > 0.0);
}

TEST_CASE("model_point_for_users is mutually consistent") {
    for (double n : {2.0, 10.0, 34.0}) {
        ModelPoint mp = model_point_for_users(n, kDefaults);
        CHECK(mp.n == n);
        CHECK(mp.tau == doctest::Approx(tau_of_p(mp.p, kDefaults)));
        CHECK(std::abs(mp.p - (1.0 - std::pow(1.0 - mp.tau, n - 1.0))) <=
              1e-8);
        CHECK(mp.tau > 0.0);
        CHECK(mp.tau < 1.0);
    }
}

TEST_CASE("clamp_probability and lenient inversion") {
    CHECK(clamp_probability(-0.5) == kProbFloor);
    CHECK(clamp_probability(0.0) == kProbFloor);
    CHECK(clamp_probability(1.0) == kProbCeil);
    CHECK(clamp_probability(0.3) == 0.3);
    CHECK(users_of_p_clamped(0.0, kDefaults) ==
          doctest::Approx(oracle::kUsersAtFloor).epsilon(1e-12));
    CHECK(users_of_p_clamped(0.3, kDefaults) ==
          doctest::Approx(oracle::kUsersAt03).epsilon(1e-12));
}

TEST_CASE("protocol parameter validation") {
    ProtocolParams bad = kDefaults;
    bad.cw_min = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = kDefaults;
    bad.max_stage = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = kDefaults;
    bad.t_idle_us = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_NOTHROW(kDefaults.validate());
}
