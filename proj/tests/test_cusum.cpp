#include <doctest.h>

#include <cmath>

#include "wifiload/cusum.hpp"

using namespace wifiload;

TEST_CASE("update keeps g at zero when stat equals the tolerance") {
    CusumState c(0.1, 20.0);
    for (int i = 0; i < 100; ++i) {
        c.update(0.1);
        CHECK(c.g == 0.0);
        CHECK_FALSE(c.triggered);
    }
}

TEST_CASE("constant excess stat triggers at the closed-form step count") {
    // stat = q + 0.5, e = 20: g grows by 0.5 per step, first trigger at
    // ceil(20/0.5) = 40.
    CusumState c(0.1, 20.0);
    int trigger_step = -1;
    for (int i = 1; i <= 60; ++i) {
        c.update(0.6);
        if (c.triggered) {
            trigger_step = i;
            break;
        }
    }
    CHECK(trigger_step == 40);
}

TEST_CASE("reset branch after a trigger") {
    CusumState c(0.1, 20.0);
    c.g = 25.0;  // previous step exceeded the threshold
    c.update(0.05);
    CHECK(c.g == doctest::Approx(-0.05).epsilon(1e-15));
    CHECK_FALSE(c.triggered);
}

TEST_CASE("transition is a pure function of (g vs e, stat)") {
    // Exhaustive small grid: the update must reproduce the two-branch
    // definition exactly for every combination.
    const double q = 0.25, e = 2.0;
    for (double g0 : {-0.2, 0.0, 0.5, 1.9, 2.0, 2.5, 7.0}) {
        for (double stat : {0.0, 0.1, 0.25, 0.3, 1.0, 5.0}) {
            CusumState c(q, e);
            c.g = g0;
            c.triggered = g0 >= e;
            c.update(stat);
            double expected = g0 <= e ? std::max(0.0, g0 + stat - q)
                                      : stat - q;
            CHECK(c.g == expected);
            CHECK(c.triggered == (c.g >= e));
        }
    }
}

TEST_CASE("trigger time equals ceil(e/(s-q)) on a dyadic grid") {
    // Dyadic steps and thresholds accumulate exactly in binary floating
    // point, so the comparison is exact including the boundary case where
    // e is an exact multiple of s - q.
    const double steps[] = {0.125, 0.25, 0.5, 1.0, 2.0};
    const double thresholds[] = {1.0, 2.5, 4.0, 10.0};
    for (double step : steps) {
        for (double e : thresholds) {
            double q = 0.5;
            double s = q + step;
            long expected = static_cast<long>(std::ceil(e / step));
            CusumState c(q, e);
            long triggered_at = -1;
            for (long i = 1; i <= expected + 5; ++i) {
                c.update(s);
                if (c.triggered) {
                    triggered_at = i;
                    break;
                }
            }
            CAPTURE(step);
            CAPTURE(e);
            CHECK(triggered_at == expected);
        }
    }
}

TEST_CASE("construction validates parameters") {
    CHECK_NOTHROW(CusumState(0.1, 20.0));
    CHECK_THROWS(CusumState(0.0, 20.0));
    CHECK_THROWS(CusumState(0.1, 0.0));
}
