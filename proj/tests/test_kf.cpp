#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "wifiload/errors.hpp"
#include "wifiload/kf.hpp"

using namespace wifiload;

namespace {

const ProtocolParams kDefaults;

std::vector<TaggedMeasurement> constant_stream(double p_hat, int slots,
                                               double first = -1.0) {
    std::vector<TaggedMeasurement> out(static_cast<std::size_t>(slots));
    for (int i = 0; i < slots; ++i) {
        out[static_cast<std::size_t>(i)].slot = i;
        out[static_cast<std::size_t>(i)].meas.p_hat =
            (i == 0 && first >= 0.0) ? first : p_hat;
    }
    return out;
}

double median(std::vector<double> v) {
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

}  // namespace

TEST_CASE("zero innovation leaves the estimate fixed") {
    double h5 = collision_of_users(5.0, kDefaults);
    KfConfig cfg;
    cfg.n0 = 5.0;
    KfState st = kf_init(h5, cfg, kDefaults);
    double v_prev = st.v;
    for (int i = 0; i < 200; ++i) {
        kf_step(st, h5, cfg, kDefaults);
        CHECK(st.n_est == doctest::Approx(5.0).epsilon(1e-9));
        CHECK(st.v > 0.0);
        CHECK(st.v <= v_prev + 1e-15);  // variance contracts with Q- = 0
        v_prev = st.v;
    }
    CHECK(st.cusum.g == 0.0);  // zero innovation never feeds the detector
}

TEST_CASE("single update matches the hand-computed oracle") {
    KfConfig cfg;
    cfg.n0 = 10.0;
    cfg.v0 = 1.0;
    cfg.k_all = 100;
    cfg.cusum_tolerance = 0.5;  // expose the statistic through g
    KfState st = kf_init(0.0, cfg, kDefaults);
    REQUIRE(st.n_est == 10.0);
    REQUIRE(st.v == 1.0);

    double p_hat = collision_of_users(10.0, kDefaults) + 0.05;
    kf_step(st, p_hat, cfg, kDefaults);

    // Tolerances reflect the library's bisection tolerance on h feeding the
    // finite-difference slope; the oracle is exact to ~1e-6 relative.
    CHECK(st.last_gain ==
          doctest::Approx(oracle::kKfStepGain).epsilon(1e-5));
    CHECK(st.n_est == doctest::Approx(oracle::kKfStepNext).epsilon(1e-6));
    CHECK(st.v == doctest::Approx(oracle::kKfStepVariance).epsilon(1e-5));
    CHECK(st.cusum.g ==
          doctest::Approx(oracle::kKfStepStat - 0.5).epsilon(1e-4));

    // The worked relation from the update equations themselves.
    CHECK(st.n_est > 10.0);
    CHECK(st.n_est - 10.0 ==
          doctest::Approx(st.last_gain * 0.05).epsilon(1e-9));
    CHECK(st.last_innovation == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("variance stays positive and gain stays in (0, 1/h')") {
    LoadSchedule sched;
    sched.segments = {{10, 400}, {20, 400}};
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto stream = run_schedule(sched, 30, seed, kDefaults);
        KfConfig cfg;
        cfg.k_all = 30;
        KfState st = kf_init(stream.front().meas.p_hat, cfg, kDefaults);
        bool ok = true;
        for (std::size_t i = 1; i < stream.size() && ok; ++i) {
            double hp = collision_slope(st.n_est, kDefaults);
            kf_step(st, stream[i].meas.p_hat, cfg, kDefaults);
            ok = ok && st.v > 0.0 && st.v < 1e6 && st.last_gain > 0.0 &&
                 st.last_gain < 1.0 / hp && st.n_est >= 1.0;
        }
        CAPTURE(seed);
        CHECK(ok);
    }
}

TEST_CASE("estimate steps shrink once the filter settles") {
    LoadSchedule sched;
    sched.segments = {{10, 2000}};
    auto stream = run_schedule(sched, 100, 11, kDefaults);
    KfConfig cfg;  // q_minus = 0: gain decays while n stays put
    auto trace = kf_run(stream, cfg, kDefaults);
    std::vector<double> early, late;
    for (std::size_t i = 51; i < 301; ++i)
        early.push_back(std::abs(trace[i].n_est - trace[i - 1].n_est));
    for (std::size_t i = 1750; i < 2000; ++i)
        late.push_back(std::abs(trace[i].n_est - trace[i - 1].n_est));
    CHECK(median(late) <= median(early));
}

TEST_CASE("noise-free stream converges monotonically to the true count") {
    double h12 = collision_of_users(12.0, kDefaults);
    double h3 = collision_of_users(3.0, kDefaults);
    auto stream = constant_stream(h12, 600, h3);  // init lands near 3
    KfConfig cfg;
    auto trace = kf_run(stream, cfg, kDefaults);
    CHECK(trace.front().n_est == doctest::Approx(3.0).epsilon(1e-6));
    for (std::size_t i = 1; i < trace.size(); ++i)
        CHECK(trace[i].n_est >= trace[i - 1].n_est - 1e-12);
    CHECK(trace.back().n_est == doctest::Approx(12.0).epsilon(0.02));
}

TEST_CASE("kf_run is deterministic") {
    LoadSchedule sched;
    sched.segments = {{8, 300}};
    auto stream = run_schedule(sched, 50, 21, kDefaults);
    KfConfig cfg;
    cfg.k_all = 50;
    auto a = kf_run(stream, cfg, kDefaults);
    auto b = kf_run(stream, cfg, kDefaults);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].n_est == b[i].n_est);
        CHECK(a[i].v == b[i].v);
        CHECK(a[i].g == b[i].g);
    }
}

TEST_CASE("small-n schedule tracks within +/-1 for most settled slots") {
    // Per-transmission measurements with the matching variance model: the
    // regime where the filter's linearization is sound.
    LoadSchedule sched;
    sched.segments = {{3, 2000}, {6, 2000}, {9, 2000}, {12, 2000}};
    auto stream =
        run_schedule(sched, 100, 1, kDefaults, MeasurementMode::PerTxCollision);
    KfConfig cfg;
    cfg.k_all = 100;
    cfg.r_model = KfRModel::PerTx;
    auto trace = kf_run(stream, cfg, kDefaults);

    std::int64_t in_band = 0, total = 0;
    for (std::size_t seg = 0; seg < 4; ++seg) {
        std::size_t begin = seg * 2000 + 1000, end = (seg + 1) * 2000;
        for (std::size_t i = begin; i < end; ++i) {
            total += 1;
            if (std::abs(trace[i].n_est - stream[i].n_true) <= 1.0)
                in_band += 1;
        }
    }
    CHECK(static_cast<double>(in_band) / static_cast<double>(total) >= 0.8);
}

TEST_CASE("configuration validation and error paths") {
    KfConfig bad;
    bad.q_plus = 0.5;
    bad.q_minus = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = KfConfig{};
    bad.v0 = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = KfConfig{};
    bad.n0 = 0.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    CHECK_THROWS_AS(kf_run({}, KfConfig{}, kDefaults), ConfigError);

    KfConfig cfg;
    KfState st = kf_init(0.3, cfg, kDefaults);
    CHECK_THROWS_AS(
        kf_step(st, std::numeric_limits<double>::quiet_NaN(), cfg, kDefaults),
        EstimatorError);
}

TEST_CASE("initialization inverts the first measurement") {
    double h7 = collision_of_users(7.0, kDefaults);
    KfConfig cfg;
    KfState st = kf_init(h7, cfg, kDefaults);
    CHECK(st.n_est == doctest::Approx(7.0).epsilon(1e-6));
    CHECK(st.v == cfg.v0);
    // Degenerate first window: clamped, estimate stays physical.
    KfState lo = kf_init(0.0, cfg, kDefaults);
    CHECK(lo.n_est >= 1.0);
}
