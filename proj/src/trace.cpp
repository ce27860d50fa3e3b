#include "wifiload/trace.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "wifiload/errors.hpp"

namespace wifiload {

namespace {

void append_real(std::string& row, const std::optional<double>& v) {
    row += ',';
    if (!v) return;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    row += buf;
}

std::optional<double> parse_real(const std::string& field, const char* name) {
    if (field.empty()) return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0')
        throw ConfigError("trace csv: bad " + std::string(name) + " value '" +
                          field + "'");
    return v;
}

}  // namespace

void write_trace_csv(const std::vector<TraceRecord>& trace,
                     std::ostream& out) {
    out << kTraceCsvHeader << '\n';
    std::string row;
    char buf[40];
    for (const auto& r : trace) {
        row.clear();
        row += std::to_string(r.t);
        row += ',';
        row += std::to_string(r.n_true);
        std::snprintf(buf, sizeof buf, ",%.17g", r.p_hat);
        row += buf;
        append_real(row, r.n_hat_raw);
        append_real(row, r.n_kf);
        append_real(row, r.n_nn);
        append_real(row, r.g_kf);
        append_real(row, r.g_nn);
        append_real(row, r.loss);
        append_real(row, r.lr);
        append_real(row, r.alpha);
        append_real(row, r.kf_step_us);
        append_real(row, r.nn_step_us);
        row += '\n';
        out << row;
    }
}

void write_trace_csv(const std::vector<TraceRecord>& trace,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_trace_csv(trace, out);
    out.flush();
    if (!out) throw ConfigError("write failed: " + path.string());
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("trace csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceCsvHeader)
        throw ConfigError("trace csv: unexpected header '" + line + "'");
    std::vector<TraceRecord> out;
    std::vector<std::string> fields;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        fields.clear();
        std::size_t start = 0;
        while (true) {
            std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 13)
            throw ConfigError("trace csv: expected 13 fields, got " +
                              std::to_string(fields.size()));
        TraceRecord r;
        r.t = std::strtoll(fields[0].c_str(), nullptr, 10);
        r.n_true = static_cast<int>(std::strtol(fields[1].c_str(), nullptr, 10));
        auto p = parse_real(fields[2], "p_hat");
        if (!p) throw ConfigError("trace csv: missing p_hat");
        r.p_hat = *p;
        r.n_hat_raw = parse_real(fields[3], "n_hat_raw");
        r.n_kf = parse_real(fields[4], "n_kf");
        r.n_nn = parse_real(fields[5], "n_nn");
        r.g_kf = parse_real(fields[6], "g_kf");
        r.g_nn = parse_real(fields[7], "g_nn");
        r.loss = parse_real(fields[8], "loss");
        r.lr = parse_real(fields[9], "lr");
        r.alpha = parse_real(fields[10], "alpha");
        r.kf_step_us = parse_real(fields[11], "kf_step_us");
        r.nn_step_us = parse_real(fields[12], "nn_step_us");
        out.push_back(r);
    }
    return out;
}

std::vector<TraceRecord> read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    return read_trace_csv(in);
}

namespace {

struct Extract {
    const std::optional<double> TraceRecord::* field;
};

std::optional<double> segment_rmse(const std::vector<TraceRecord>& trace,
                                   std::int64_t begin, std::int64_t end,
                                   int n_true,
                                   std::optional<double> TraceRecord::* col) {
    double acc = 0.0;
    std::int64_t count = 0;
    for (std::int64_t i = begin; i < end; ++i) {
        const auto& v = trace[static_cast<std::size_t>(i)].*col;
        if (!v) return std::nullopt;
        double e = *v - n_true;
        acc += e * e;
        ++count;
    }
    if (count == 0) return std::nullopt;
    return std::sqrt(acc / static_cast<double>(count));
}

std::optional<std::int64_t> segment_convergence(
    const std::vector<TraceRecord>& trace, std::int64_t begin,
    std::int64_t end, int n_true, double band, int hold,
    std::optional<double> TraceRecord::* col) {
    int run = 0;
    for (std::int64_t i = begin; i < end; ++i) {
        const auto& v = trace[static_cast<std::size_t>(i)].*col;
        if (!v) return std::nullopt;
        run = std::fabs(*v - n_true) <= band ? run + 1 : 0;
        if (run >= hold) return i - begin - (hold - 1);
    }
    return std::nullopt;
}

std::optional<std::int64_t> first_trigger(
    const std::vector<TraceRecord>& trace, std::int64_t begin,
    std::int64_t end, double threshold,
    std::optional<double> TraceRecord::* col) {
    for (std::int64_t i = begin; i < end; ++i) {
        const auto& v = trace[static_cast<std::size_t>(i)].*col;
        if (v && *v >= threshold) return i - begin;
    }
    return std::nullopt;
}

std::optional<std::int64_t> tail_trigger_count(
    const std::vector<TraceRecord>& trace, std::int64_t begin,
    std::int64_t end, std::int64_t tail, double threshold,
    std::optional<double> TraceRecord::* col) {
    std::int64_t from = std::max(begin, end - tail);
    bool any = false;
    std::int64_t count = 0;
    for (std::int64_t i = from; i < end; ++i) {
        const auto& v = trace[static_cast<std::size_t>(i)].*col;
        if (!v) return std::nullopt;
        any = true;
        if (*v >= threshold) ++count;
    }
    if (!any) return std::nullopt;
    return count;
}

std::optional<double> segment_mean(const std::vector<TraceRecord>& trace,
                                   std::int64_t begin, std::int64_t end,
                                   std::optional<double> TraceRecord::* col) {
    double acc = 0.0;
    std::int64_t count = 0;
    for (std::int64_t i = begin; i < end; ++i) {
        const auto& v = trace[static_cast<std::size_t>(i)].*col;
        if (v) {
            acc += *v;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return acc / static_cast<double>(count);
}

}  // namespace

std::vector<SegmentMetrics> compute_segment_metrics(
    const std::vector<TraceRecord>& trace, const LoadSchedule& schedule,
    const MetricsOptions& options) {
    schedule.validate();
    if (static_cast<std::int64_t>(trace.size()) != schedule.total_slots())
        throw ConfigError("metrics: trace length " +
                          std::to_string(trace.size()) +
                          " does not match schedule slots " +
                          std::to_string(schedule.total_slots()));
    std::vector<SegmentMetrics> out;
    std::int64_t begin = 0;
    int index = 0;
    for (const auto& seg : schedule.segments) {
        std::int64_t end = begin + seg.duration_slots;
        std::int64_t tail_begin =
            begin + static_cast<std::int64_t>(
                        std::llround(static_cast<double>(seg.duration_slots) *
                                     (1.0 - options.tail_fraction)));
        if (tail_begin < begin) tail_begin = begin;
        if (tail_begin >= end) tail_begin = end - 1;
        SegmentMetrics m;
        m.segment = index++;
        m.n_true = seg.users;
        m.start_slot = begin;
        m.length = seg.duration_slots;
        m.rmse_raw = segment_rmse(trace, tail_begin, end, seg.users,
                                  &TraceRecord::n_hat_raw);
        m.rmse_kf =
            segment_rmse(trace, tail_begin, end, seg.users, &TraceRecord::n_kf);
        m.rmse_nn =
            segment_rmse(trace, tail_begin, end, seg.users, &TraceRecord::n_nn);
        m.convergence_kf =
            segment_convergence(trace, begin, end, seg.users, options.conv_band,
                                options.conv_hold, &TraceRecord::n_kf);
        m.convergence_nn =
            segment_convergence(trace, begin, end, seg.users, options.conv_band,
                                options.conv_hold, &TraceRecord::n_nn);
        m.detect_kf = first_trigger(trace, begin, end, options.kf_threshold,
                                    &TraceRecord::g_kf);
        m.detect_nn = first_trigger(trace, begin, end, options.nn_threshold,
                                    &TraceRecord::g_nn);
        m.tail_triggers_kf =
            tail_trigger_count(trace, begin, end, options.stable_tail,
                               options.kf_threshold, &TraceRecord::g_kf);
        m.tail_triggers_nn =
            tail_trigger_count(trace, begin, end, options.stable_tail,
                               options.nn_threshold, &TraceRecord::g_nn);
        m.mean_kf_step_us =
            segment_mean(trace, begin, end, &TraceRecord::kf_step_us);
        m.mean_nn_step_us =
            segment_mean(trace, begin, end, &TraceRecord::nn_step_us);
        out.push_back(m);
        begin = end;
    }
    return out;
}

namespace {

template <typename T>
void append_opt(std::string& row, const std::optional<T>& v) {
    row += ',';
    if (!v) return;
    if constexpr (std::is_same_v<T, double>) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *v);
        row += buf;
    } else {
        row += std::to_string(*v);
    }
}

}  // namespace

void write_metrics_csv(const std::vector<SegmentMetrics>& metrics,
                       std::ostream& out) {
    out << "segment,n_true,start_slot,length,rmse_raw,rmse_kf,rmse_nn,"
           "convergence_kf,convergence_nn,detect_kf,detect_nn,"
           "tail_triggers_kf,tail_triggers_nn,mean_kf_step_us,mean_nn_step_us\n";
    for (const auto& m : metrics) {
        std::string row = std::to_string(m.segment);
        row += ',';
        row += std::to_string(m.n_true);
        row += ',';
        row += std::to_string(m.start_slot);
        row += ',';
        row += std::to_string(m.length);
        append_opt(row, m.rmse_raw);
        append_opt(row, m.rmse_kf);
        append_opt(row, m.rmse_nn);
        append_opt(row, m.convergence_kf);
        append_opt(row, m.convergence_nn);
        append_opt(row, m.detect_kf);
        append_opt(row, m.detect_nn);
        append_opt(row, m.tail_triggers_kf);
        append_opt(row, m.tail_triggers_nn);
        append_opt(row, m.mean_kf_step_us);
        append_opt(row, m.mean_nn_step_us);
        row += '\n';
        out << row;
    }
}

void write_metrics_csv(const std::vector<SegmentMetrics>& metrics,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_metrics_csv(metrics, out);
    out.flush();
    if (!out) throw ConfigError("write failed: " + path.string());
}

}  // namespace wifiload
