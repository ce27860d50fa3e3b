#include "wifiload/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

#include "wifiload/errors.hpp"

namespace wifiload {

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 540.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 30.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 55.0;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;

    void include(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (hi <= lo) hi = lo + 1.0;
        double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
};

struct Frame {
    Axis x, y;

    double px(double v) const {
        return kMarginLeft +
               (v - x.lo) / (x.hi - x.lo) * (kWidth - kMarginLeft - kMarginRight);
    }
    double py(double v) const {
        return kHeight - kMarginBottom -
               (v - y.lo) / (y.hi - y.lo) *
                   (kHeight - kMarginTop - kMarginBottom);
    }
};

// Round ticks: ~6 intervals at a 1/2/5 step.
std::vector<double> ticks(double lo, double hi) {
    double raw = (hi - lo) / 6.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> out;
    double first = std::ceil(lo / step) * step;
    for (double v = first; v <= hi + 0.5 * step; v += step)
        out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return out;
}

void open_svg(std::string& svg) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" "
                  "height=\"%g\" viewBox=\"0 0 %g %g\">\n",
                  kWidth, kHeight, kWidth, kHeight);
    svg += buf;
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void draw_axes(std::string& svg, const Frame& f, const std::string& title,
               const std::string& x_label, const std::string& y_label) {
    svg += "<g stroke=\"#444\" stroke-width=\"1\" fill=\"none\">\n";
    svg += "<path d=\"M" + fmt(kMarginLeft) + " " + fmt(kMarginTop) + " V" +
           fmt(kHeight - kMarginBottom) + " H" + fmt(kWidth - kMarginRight) +
           "\"/>\n";
    svg += "</g>\n";
    svg += "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\">\n";
    for (double v : ticks(f.x.lo, f.x.hi)) {
        double x = f.px(v);
        svg += "<line x1=\"" + fmt(x) + "\" y1=\"" +
               fmt(kHeight - kMarginBottom) + "\" x2=\"" + fmt(x) +
               "\" y2=\"" + fmt(kHeight - kMarginBottom + 5) +
               "\" stroke=\"#444\"/>\n";
        svg += "<text x=\"" + fmt(x) + "\" y=\"" +
               fmt(kHeight - kMarginBottom + 18) +
               "\" text-anchor=\"middle\">" + fmt(v) + "</text>\n";
    }
    for (double v : ticks(f.y.lo, f.y.hi)) {
        double y = f.py(v);
        svg += "<line x1=\"" + fmt(kMarginLeft - 5) + "\" y1=\"" + fmt(y) +
               "\" x2=\"" + fmt(kMarginLeft) + "\" y2=\"" + fmt(y) +
               "\" stroke=\"#444\"/>\n";
        svg += "<text x=\"" + fmt(kMarginLeft - 8) + "\" y=\"" + fmt(y + 4) +
               "\" text-anchor=\"end\">" + fmt(v) + "</text>\n";
    }
    svg += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"22\" font-size=\"15\" "
           "text-anchor=\"middle\">" + title + "</text>\n";
    svg += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"" + fmt(kHeight - 12) +
           "\" text-anchor=\"middle\">" + x_label + "</text>\n";
    svg += "<text x=\"18\" y=\"" + fmt(kHeight / 2) +
           "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
           fmt(kHeight / 2) + ")\">" + y_label + "</text>\n";
    svg += "</g>\n";
}

using Column = std::optional<double> TraceRecord::*;

void polyline(std::string& svg, const std::vector<TraceRecord>& trace,
              const Frame& f, Column col, const char* color) {
    std::string pts;
    bool any = false;
    for (const auto& r : trace) {
        if (!(r.*col)) continue;
        any = true;
        pts += fmt(f.px(static_cast<double>(r.t))) + "," +
               fmt(f.py(*(r.*col))) + " ";
    }
    if (!any) return;
    svg += "<polyline fill=\"none\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
}

void legend_entry(std::string& svg, double x, double y, const char* color,
                  const std::string& label) {
    svg += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(y) + "\" x2=\"" +
           fmt(x + 22) + "\" y2=\"" + fmt(y) + "\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt(x + 28) + "\" y=\"" + fmt(y + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\">" +
           label + "</text>\n";
}

bool has_column(const std::vector<TraceRecord>& trace, Column col) {
    for (const auto& r : trace)
        if (r.*col) return true;
    return false;
}

std::string render_tracking(const std::vector<TraceRecord>& trace) {
    Frame f;
    f.x = {static_cast<double>(trace.front().t),
           static_cast<double>(trace.back().t)};
    f.y = {static_cast<double>(trace.front().n_true),
           static_cast<double>(trace.front().n_true)};
    for (const auto& r : trace) {
        f.y.include(static_cast<double>(r.n_true));
        for (Column c : {&TraceRecord::n_hat_raw, &TraceRecord::n_kf,
                         &TraceRecord::n_nn})
            if (r.*c) f.y.include(*(r.*c));
    }
    f.y.finish();

    std::string svg;
    open_svg(svg);
    draw_axes(svg, f, "Estimated active users", "slot", "users");

    // True load as a staircase.
    std::string pts;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        double y = f.py(static_cast<double>(trace[i].n_true));
        if (i > 0 && trace[i].n_true != trace[i - 1].n_true)
            pts += fmt(f.px(static_cast<double>(trace[i].t))) + "," +
                   fmt(f.py(static_cast<double>(trace[i - 1].n_true))) + " ";
        pts += fmt(f.px(static_cast<double>(trace[i].t))) + "," + fmt(y) + " ";
    }
    svg += "<polyline fill=\"none\" stroke=\"#222\" stroke-width=\"1.5\" "
           "stroke-dasharray=\"6 3\" points=\"" + pts + "\"/>\n";

    polyline(svg, trace, f, &TraceRecord::n_hat_raw, "#bbbbbb");
    polyline(svg, trace, f, &TraceRecord::n_kf, "#d62728");
    polyline(svg, trace, f, &TraceRecord::n_nn, "#1f77b4");

    double lx = kWidth - kMarginRight - 170.0, ly = kMarginTop + 14.0;
    legend_entry(svg, lx, ly, "#222", "true n");
    ly += 18;
    if (has_column(trace, &TraceRecord::n_hat_raw)) {
        legend_entry(svg, lx, ly, "#bbbbbb", "raw inversion");
        ly += 18;
    }
    if (has_column(trace, &TraceRecord::n_kf)) {
        legend_entry(svg, lx, ly, "#d62728", "Kalman filter");
        ly += 18;
    }
    if (has_column(trace, &TraceRecord::n_nn))
        legend_entry(svg, lx, ly, "#1f77b4", "neural estimator");
    svg += "</svg>\n";
    return svg;
}

std::string render_loss(const std::vector<TraceRecord>& trace) {
    Frame f;
    f.x = {static_cast<double>(trace.front().t),
           static_cast<double>(trace.back().t)};
    f.y = {0.0, 0.0};
    for (const auto& r : trace)
        for (Column c : {&TraceRecord::loss, &TraceRecord::g_nn})
            if (r.*c) f.y.include(*(r.*c));
    f.y.finish();

    std::string svg;
    open_svg(svg);
    draw_axes(svg, f, "Online loss and change statistic", "slot", "value");
    polyline(svg, trace, f, &TraceRecord::loss, "#1f77b4");
    polyline(svg, trace, f, &TraceRecord::g_nn, "#ff7f0e");

    double lx = kWidth - kMarginRight - 170.0, ly = kMarginTop + 14.0;
    if (has_column(trace, &TraceRecord::loss)) {
        legend_entry(svg, lx, ly, "#1f77b4", "loss");
        ly += 18;
    }
    if (has_column(trace, &TraceRecord::g_nn))
        legend_entry(svg, lx, ly, "#ff7f0e", "CUSUM g");
    svg += "</svg>\n";
    return svg;
}

std::string render_timing(const std::vector<TraceRecord>& trace) {
    double kf_acc = 0.0, nn_acc = 0.0;
    std::int64_t kf_cnt = 0, nn_cnt = 0;
    for (const auto& r : trace) {
        if (r.kf_step_us) {
            kf_acc += *r.kf_step_us;
            ++kf_cnt;
        }
        if (r.nn_step_us) {
            nn_acc += *r.nn_step_us;
            ++nn_cnt;
        }
    }
    struct Bar {
        std::string label;
        double value;
    };
    std::vector<Bar> bars;
    if (kf_cnt > 0)
        bars.push_back({"kf_step", kf_acc / static_cast<double>(kf_cnt)});
    if (nn_cnt > 0)
        bars.push_back({"nn_step", nn_acc / static_cast<double>(nn_cnt)});
    if (bars.empty())
        throw ConfigError("plot: trace has no step-time columns");

    Frame f;
    f.x = {0.0, static_cast<double>(bars.size())};
    f.y = {0.0, 0.0};
    for (const auto& b : bars) f.y.include(b.value);
    f.y.finish();
    f.y.lo = 0.0;

    std::string svg;
    open_svg(svg);
    draw_axes(svg, f, "Mean estimator step time", "", "microseconds");
    const char* colors[] = {"#d62728", "#1f77b4"};
    for (std::size_t i = 0; i < bars.size(); ++i) {
        double x0 = f.px(static_cast<double>(i) + 0.25);
        double x1 = f.px(static_cast<double>(i) + 0.75);
        double y = f.py(bars[i].value);
        svg += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y) + "\" width=\"" +
               fmt(x1 - x0) + "\" height=\"" +
               fmt(f.py(0.0) - y) + "\" fill=\"";
        svg += colors[i % 2];
        svg += "\"/>\n";
        svg += "<text x=\"" + fmt((x0 + x1) / 2) + "\" y=\"" +
               fmt(kHeight - kMarginBottom + 18) +
               "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\" "
               "text-anchor=\"middle\">" + bars[i].label + "</text>\n";
        svg += "<text x=\"" + fmt((x0 + x1) / 2) + "\" y=\"" + fmt(y - 6) +
               "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\" "
               "text-anchor=\"middle\">" + fmt(bars[i].value) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace

PlotKind plot_kind_from_name(std::string_view name) {
    if (name == "tracking") return PlotKind::Tracking;
    if (name == "loss") return PlotKind::Loss;
    if (name == "timing") return PlotKind::Timing;
    throw ConfigError("plot: expected tracking, loss or timing, got '" +
                      std::string(name) + "'");
}

std::string render_plot(const std::vector<TraceRecord>& trace, PlotKind kind) {
    if (trace.empty()) throw ConfigError("plot: trace is empty");
    switch (kind) {
        case PlotKind::Tracking: return render_tracking(trace);
        case PlotKind::Loss: return render_loss(trace);
        case PlotKind::Timing: return render_timing(trace);
    }
    throw ConfigError("plot: unknown plot kind");
}

void write_plot(const std::vector<TraceRecord>& trace, PlotKind kind,
                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << render_plot(trace, kind);
    out.flush();
    if (!out) throw ConfigError("write failed: " + path.string());
}

}  // namespace wifiload
