// Command-line front end: simulate the channel, run the estimators, time
// them, sweep detector parameters, and render SVG plots from trace files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wifiload/errors.hpp"
#include "wifiload/experiment.hpp"
#include "wifiload/svg_plot.hpp"

namespace fs = std::filesystem;
using namespace wifiload;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string preset = "small-n";
    std::string out_dir = "out";
    std::string mode;
    std::vector<std::string> estimators;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path,
                    "JSON config file (overrides --preset)");
    cmd->add_option("--preset", args.preset,
                    "schedule preset: small-n or large-n");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--mode", args.mode,
                    "measurement mode: busy-fraction, collision-share or "
                    "per-tx-collision");
    cmd->add_option("--estimators", args.estimators,
                    "subset of kf,nn,raw to run")
        ->delimiter(',');
    cmd->add_option("--seed", args.seed, "simulation seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
}

ExperimentConfig load_config(const CommonArgs& args) {
    ExperimentConfig cfg = args.config_path.empty()
                               ? preset_config(args.preset)
                               : ExperimentConfig::from_json_file(
                                     fs::path(args.config_path));
    if (args.seed_set) cfg.seed = args.seed;
    if (!args.mode.empty()) cfg.mode = measurement_mode_from_name(args.mode);
    if (!args.estimators.empty()) {
        cfg.enable_kf = cfg.enable_nn = cfg.enable_raw = false;
        for (const auto& e : args.estimators) {
            if (e == "kf")
                cfg.enable_kf = true;
            else if (e == "nn")
                cfg.enable_nn = true;
            else if (e == "raw")
                cfg.enable_raw = true;
            else
                throw ConfigError("--estimators: unknown estimator '" + e +
                                  "'");
        }
    }
    return cfg;
}

fs::path ensure_out_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw ConfigError("cannot create directory " + p.string());
    return p;
}

std::string opt_real(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", *v);
    return buf;
}

std::string opt_int(const std::optional<std::int64_t>& v) {
    return v ? std::to_string(*v) : "-";
}

void print_metrics(const std::vector<SegmentMetrics>& metrics) {
    for (const auto& m : metrics) {
        std::printf(
            "segment %lld  n=%lld  rmse raw/kf/nn %s/%s/%s  "
            "conv kf/nn %s/%s  detect kf/nn %s/%s  tail-trig kf/nn %s/%s\n",
            static_cast<long long>(m.segment),
            static_cast<long long>(m.n_true), opt_real(m.rmse_raw).c_str(),
            opt_real(m.rmse_kf).c_str(), opt_real(m.rmse_nn).c_str(),
            opt_int(m.convergence_kf).c_str(),
            opt_int(m.convergence_nn).c_str(), opt_int(m.detect_kf).c_str(),
            opt_int(m.detect_nn).c_str(), opt_int(m.tail_triggers_kf).c_str(),
            opt_int(m.tail_triggers_nn).c_str());
    }
}

int cmd_run(const CommonArgs& args, bool raw_only) {
    ExperimentConfig cfg = load_config(args);
    if (raw_only) {
        cfg.enable_kf = false;
        cfg.enable_nn = false;
        cfg.enable_raw = true;
    }
    ExperimentResult result = run_experiment(cfg);

    fs::path out = ensure_out_dir(args.out_dir);
    write_trace_csv(result.trace, out / "trace.csv");
    write_metrics_csv(result.metrics, out / "metrics.csv");
    std::ofstream cfg_out(out / "config.json");
    cfg_out << cfg.to_json_text();

    print_metrics(result.metrics);
    std::printf("wrote %s and %s\n", (out / "trace.csv").string().c_str(),
                (out / "metrics.csv").string().c_str());
    return 0;
}

int cmd_bench(const CommonArgs& args, int iters, int users) {
    ExperimentConfig cfg = load_config(args);
    TimingReport rep = bench_timing(cfg, iters, users);
    std::printf("bench: %d iterations at n=%d\n", rep.iters, rep.users);
    std::printf("  kf_step   mean %.3f us, median %.3f us\n", rep.kf_mean_us,
                rep.kf_median_us);
    std::printf("  nn_step   mean %.3f us, median %.3f us\n", rep.nn_mean_us,
                rep.nn_median_us);
    std::printf("  observe   mean %.3f us (modeled channel time per window)\n",
                rep.observe_mean_us);
    std::printf("  slot total with kf %.3f us, with nn %.3f us\n",
                rep.kf_slot_total_us, rep.nn_slot_total_us);
    return 0;
}

int cmd_sweep(const CommonArgs& args, const SweepSpec& grid) {
    SweepSpec spec = grid;
    spec.base = load_config(args);
    std::vector<SweepRow> rows = run_sweep(spec);
    fs::path out = ensure_out_dir(args.out_dir);
    write_sweep_csv(rows, out / "sweep.csv");
    std::printf("wrote %zu rows to %s\n", rows.size(),
                (out / "sweep.csv").string().c_str());
    return 0;
}

int cmd_plot(const std::string& trace_path, const std::string& kind_name,
             std::string out_path) {
    std::vector<TraceRecord> trace = read_trace_csv(fs::path(trace_path));
    PlotKind kind = plot_kind_from_name(kind_name);
    if (out_path.empty()) out_path = kind_name + ".svg";
    write_plot(trace, kind, fs::path(out_path));
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Estimate the number of active stations on a saturated "
                 "802.11 channel from collision statistics"};
    app.require_subcommand(1);

    CommonArgs run_args;
    CLI::App* run = app.add_subcommand(
        "run", "simulate a load schedule and run the enabled estimators");
    add_common(run, run_args);

    CommonArgs sim_args;
    CLI::App* sim = app.add_subcommand(
        "simulate", "simulate a load schedule and write the raw "
                    "measurement trace (no estimators)");
    add_common(sim, sim_args);

    CommonArgs bench_args;
    int bench_iters = 2000;
    int bench_users = 25;
    CLI::App* bench =
        app.add_subcommand("bench", "time kf_step and nn_step per iteration");
    add_common(bench, bench_args);
    bench->add_option("--iters", bench_iters, "timed iterations (>= 100)");
    bench->add_option("--users", bench_users, "fixed station count");

    CommonArgs sweep_args;
    SweepSpec sweep_grid;
    CLI::App* sweep = app.add_subcommand(
        "sweep", "grid over detector parameters and seeds");
    add_common(sweep, sweep_args);
    sweep->add_option("--q-minus", sweep_grid.kf_q_minus,
                      "filter steady-regime process-noise values")
        ->delimiter(',');
    sweep->add_option("--kf-tol", sweep_grid.kf_cusum_tolerance,
                      "filter CUSUM tolerance values")
        ->delimiter(',');
    sweep->add_option("--nn-threshold", sweep_grid.nn_threshold,
                      "estimator CUSUM threshold values")
        ->delimiter(',');
    sweep->add_option("--seeds", sweep_grid.seeds, "simulation seeds")
        ->delimiter(',');
    sweep->add_option("--threads", sweep_grid.threads,
                      "worker threads (0 = hardware concurrency)");

    std::string plot_trace, plot_kind = "tracking", plot_out;
    CLI::App* plot =
        app.add_subcommand("plot", "render an SVG from a trace CSV");
    plot->add_option("trace", plot_trace, "trace.csv produced by run")
        ->required();
    plot->add_option("--kind", plot_kind, "tracking, loss or timing");
    plot->add_option("-o,--out", plot_out,
                     "output SVG path (default <kind>.svg)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(run_args, false);
        if (sim->parsed()) return cmd_run(sim_args, true);
        if (bench->parsed())
            return cmd_bench(bench_args, bench_iters, bench_users);
        if (sweep->parsed()) return cmd_sweep(sweep_args, sweep_grid);
        if (plot->parsed()) return cmd_plot(plot_trace, plot_kind, plot_out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
