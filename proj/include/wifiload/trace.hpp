#pragma once

// Experiment trace rows, CSV serialization, and per-segment metrics.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "wifiload/dcf_sim.hpp"

namespace wifiload {

inline constexpr std::string_view kTraceCsvHeader =
    "t,n_true,p_hat,n_hat_raw,n_kf,n_nn,g_kf,g_nn,loss,lr,alpha,kf_step_us,nn_step_us";

// One row of experiment output. Disabled-estimator fields are absent and
// render as empty CSV cells.
struct TraceRecord {
    std::int64_t t = 0;
    int n_true = 0;
    double p_hat = 0.0;
    std::optional<double> n_hat_raw;
    std::optional<double> n_kf;
    std::optional<double> n_nn;
    std::optional<double> g_kf;
    std::optional<double> g_nn;
    std::optional<double> loss;
    std::optional<double> lr;
    std::optional<double> alpha;
    std::optional<double> kf_step_us;
    std::optional<double> nn_step_us;
};

void write_trace_csv(const std::vector<TraceRecord>& trace, std::ostream& out);
void write_trace_csv(const std::vector<TraceRecord>& trace,
                     const std::filesystem::path& path);

// Parses a file produced by write_trace_csv. Throws ConfigError on a
// malformed header or row.
std::vector<TraceRecord> read_trace_csv(std::istream& in);
std::vector<TraceRecord> read_trace_csv(const std::filesystem::path& path);

struct MetricsOptions {
    double tail_fraction = 0.5;  // RMSE window: trailing fraction of segment
    double conv_band = 1.0;      // convergence band around n_true
    int conv_hold = 50;          // consecutive in-band slots to converge
    std::int64_t stable_tail = 1000;  // trailing slots scanned for triggers
    double kf_threshold = 30.0;  // trigger level applied to the g_kf column
    double nn_threshold = 20.0;  // trigger level applied to the g_nn column
};

struct SegmentMetrics {
    int segment = 0;
    int n_true = 0;
    std::int64_t start_slot = 0;
    std::int64_t length = 0;
    std::optional<double> rmse_raw;
    std::optional<double> rmse_kf;
    std::optional<double> rmse_nn;
    // first in-segment slot where |est - n_true| <= band held conv_hold
    // slots; absent if never
    std::optional<std::int64_t> convergence_kf;
    std::optional<std::int64_t> convergence_nn;
    // slots from segment start to the first detector trigger; absent if none
    std::optional<std::int64_t> detect_kf;
    std::optional<std::int64_t> detect_nn;
    // triggered slots within the trailing stable_tail slots
    std::optional<std::int64_t> tail_triggers_kf;
    std::optional<std::int64_t> tail_triggers_nn;
    std::optional<double> mean_kf_step_us;
    std::optional<double> mean_nn_step_us;
};

std::vector<SegmentMetrics> compute_segment_metrics(
    const std::vector<TraceRecord>& trace, const LoadSchedule& schedule,
    const MetricsOptions& options = {});

void write_metrics_csv(const std::vector<SegmentMetrics>& metrics,
                       std::ostream& out);
void write_metrics_csv(const std::vector<SegmentMetrics>& metrics,
                       const std::filesystem::path& path);

}  // namespace wifiload
