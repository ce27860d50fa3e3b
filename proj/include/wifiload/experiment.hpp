#pragma once

// Experiment orchestration: config parsing, seeded end-to-end runs of the
// simulator plus both estimators on a shared measurement stream, metrics,
// timing benchmarks, and parameter sweeps.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wifiload/dcf_sim.hpp"
#include "wifiload/kf.hpp"
#include "wifiload/nn.hpp"
#include "wifiload/trace.hpp"

namespace wifiload {

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
    ProtocolParams protocol;
    LoadSchedule schedule;
    std::int64_t k_all = 100;
    std::uint64_t seed = 1;
    MeasurementMode mode = MeasurementMode::BusyFraction;
    KfConfig kf;
    NnConfig nn;
    bool enable_kf = true;
    bool enable_nn = true;
    bool enable_raw = true;
    std::string out_dir;  // optional output directory for the CLI

    void validate() const;  // throws ConfigError with field-level messages

    // JSON round trip ({"schema_version": 1, ...}); unknown keys rejected.
    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_json_file(const std::filesystem::path& path);
    std::string to_json_text() const;
};

// Named schedule presets: "small-n" = 3/6/9/12, "large-n" = 21/25/30/34,
// 2000 slots each. Throws ConfigError for unknown names.
LoadSchedule preset_schedule(std::string_view name);
ExperimentConfig preset_config(std::string_view name);

const char* measurement_mode_name(MeasurementMode mode);
MeasurementMode measurement_mode_from_name(std::string_view name);

struct ExperimentResult {
    std::vector<TraceRecord> trace;
    std::vector<SegmentMetrics> metrics;
};

// Runs the schedule once and feeds the one shared measurement stream to every
// enabled estimator. Estimates are deterministic given the config; the two
// *_step_us columns are wall-time measurements and are not.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct TimingReport {
    int iters = 0;
    int users = 0;
    double kf_mean_us = 0.0;
    double kf_median_us = 0.0;
    double nn_mean_us = 0.0;
    double nn_median_us = 0.0;
    double observe_mean_us = 0.0;  // modeled channel-observation time per slot
    double kf_slot_total_us = 0.0; // observe_mean_us + kf_mean_us
    double nn_slot_total_us = 0.0; // observe_mean_us + nn_mean_us
};

// Times kf_step and nn_step over iters windows at a fixed user count
// (default 25: the large-n regime). Requires iters >= 100.
TimingReport bench_timing(const ExperimentConfig& cfg, int iters,
                          int users = 25);

struct SweepSpec {
    ExperimentConfig base;
    std::vector<double> kf_q_minus;       // grid over Q-
    std::vector<double> kf_cusum_tolerance;  // grid over q_k
    std::vector<double> nn_threshold;     // grid over e_d
    std::vector<std::uint64_t> seeds;
    int threads = 0;  // 0 = hardware concurrency
};

struct SweepRow {
    double q_minus = 0.0;
    double kf_tolerance = 0.0;
    double nn_threshold = 0.0;
    std::uint64_t seed = 0;
    SegmentMetrics metrics;
};

// Fans out one worker per grid point; rows are merged in grid order so the
// output is deterministic regardless of thread scheduling.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);
void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::filesystem::path& path);

}  // namespace wifiload
