#include <doctest.h>

#include <string>
#include <vector>

#include "wifiload/errors.hpp"
#include "wifiload/svg_plot.hpp"

using namespace wifiload;

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

std::vector<TraceRecord> full_trace(int slots) {
    std::vector<TraceRecord> t(static_cast<std::size_t>(slots));
    for (int i = 0; i < slots; ++i) {
        auto& r = t[static_cast<std::size_t>(i)];
        r.t = i;
        r.n_true = i < slots / 2 ? 5 : 9;
        r.p_hat = 0.2;
        r.n_hat_raw = 5.5 + 0.01 * i;
        r.n_kf = 5.2;
        r.n_nn = 4.9;
        r.g_nn = 0.5;
        r.loss = 0.25;
        r.kf_step_us = 12.0;
        r.nn_step_us = 3.0;
    }
    return t;
}

}  // namespace

TEST_CASE("tracking plot holds one polyline per estimator plus the staircase") {
    std::string svg = render_plot(full_trace(100), PlotKind::Tracking);
    CHECK(count_of(svg, "<polyline") == 4);  // true n + raw + kf + nn
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("Kalman") != std::string::npos);

    // Raw column disabled: one polyline fewer.
    auto partial = full_trace(100);
    for (auto& r : partial) r.n_hat_raw.reset();
    CHECK(count_of(render_plot(partial, PlotKind::Tracking), "<polyline") ==
          3);
}

TEST_CASE("loss plot renders the loss and detector traces") {
    std::string svg = render_plot(full_trace(60), PlotKind::Loss);
    CHECK(count_of(svg, "<polyline") == 2);
}

TEST_CASE("timing plot renders one bar per timed estimator") {
    std::string svg = render_plot(full_trace(60), PlotKind::Timing);
    CHECK(count_of(svg, "<rect") >= 2);  // background + two bars
    CHECK(svg.find("kf_step") != std::string::npos);
    CHECK(svg.find("nn_step") != std::string::npos);

    auto no_timing = full_trace(10);
    for (auto& r : no_timing) {
        r.kf_step_us.reset();
        r.nn_step_us.reset();
    }
    CHECK_THROWS_AS(render_plot(no_timing, PlotKind::Timing), ConfigError);
}

TEST_CASE("rendering is deterministic and rejects empty input") {
    auto t = full_trace(40);
    CHECK(render_plot(t, PlotKind::Tracking) ==
          render_plot(t, PlotKind::Tracking));
    CHECK_THROWS_AS(render_plot({}, PlotKind::Tracking), ConfigError);
}

TEST_CASE("plot kinds parse by name") {
    CHECK(plot_kind_from_name("tracking") == PlotKind::Tracking);
    CHECK(plot_kind_from_name("loss") == PlotKind::Loss);
    CHECK(plot_kind_from_name("timing") == PlotKind::Timing);
    CHECK_THROWS_AS(plot_kind_from_name("pie"), ConfigError);
}
