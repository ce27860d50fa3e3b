#include "wifiload/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "wifiload/errors.hpp"

namespace wifiload {

using nlohmann::json;

namespace {

double step_us(std::chrono::steady_clock::time_point t0,
               std::chrono::steady_clock::time_point t1) {
    return std::chrono::duration<double, std::micro>(t1 - t0).count();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& where) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw ConfigError("config: unknown key '" + item.key() + "' in " +
                              where);
    }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + std::string(key) +
                          "': " + e.what());
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    protocol.validate();
    schedule.validate();
    if (k_all < 1) throw ConfigError("k_all must be >= 1");
    kf.validate();
    nn.validate();
    if (!enable_kf && !enable_nn && !enable_raw)
        throw ConfigError("estimators: at least one of kf, nn, raw required");
}

const char* measurement_mode_name(MeasurementMode mode) {
    switch (mode) {
        case MeasurementMode::BusyFraction: return "busy-fraction";
        case MeasurementMode::CollisionShare: return "collision-share";
        case MeasurementMode::PerTxCollision: return "per-tx-collision";
    }
    return "busy-fraction";
}

MeasurementMode measurement_mode_from_name(std::string_view name) {
    if (name == "busy-fraction") return MeasurementMode::BusyFraction;
    if (name == "collision-share") return MeasurementMode::CollisionShare;
    if (name == "per-tx-collision") return MeasurementMode::PerTxCollision;
    throw ConfigError("mode: expected busy-fraction, collision-share or "
                      "per-tx-collision, got '" +
                      std::string(name) + "'");
}

LoadSchedule preset_schedule(std::string_view name) {
    LoadSchedule s;
    if (name == "small-n")
        s.segments = {{3, 2000}, {6, 2000}, {9, 2000}, {12, 2000}};
    else if (name == "large-n")
        s.segments = {{21, 2000}, {25, 2000}, {30, 2000}, {34, 2000}};
    else
        throw ConfigError("preset: expected small-n or large-n, got '" +
                          std::string(name) + "'");
    return s;
}

ExperimentConfig preset_config(std::string_view name) {
    ExperimentConfig cfg;
    cfg.schedule = preset_schedule(name);
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    reject_unknown(j,
                   {"schema_version", "protocol", "schedule", "k_all", "seed",
                    "mode", "estimators", "kf", "nn", "out_dir"},
                   "top level");
    if (!j.contains("schema_version"))
        throw ConfigError("config: missing schema_version");
    int version = -1;
    read_field(j, "schema_version", version);
    if (version != kConfigSchemaVersion)
        throw ConfigError("config: unsupported schema_version " +
                          std::to_string(version));

    ExperimentConfig cfg;
    if (j.contains("protocol")) {
        const json& p = j.at("protocol");
        reject_unknown(p,
                       {"cw_min", "max_stage", "t_success_us",
                        "t_collision_us", "t_idle_us"},
                       "protocol");
        read_field(p, "cw_min", cfg.protocol.cw_min);
        read_field(p, "max_stage", cfg.protocol.max_stage);
        read_field(p, "t_success_us", cfg.protocol.t_success_us);
        read_field(p, "t_collision_us", cfg.protocol.t_collision_us);
        read_field(p, "t_idle_us", cfg.protocol.t_idle_us);
    }
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        if (s.is_string()) {
            cfg.schedule = preset_schedule(s.get<std::string>());
        } else if (s.is_array()) {
            cfg.schedule.segments.clear();
            for (const auto& seg : s) {
                reject_unknown(seg, {"users", "slots"}, "schedule segment");
                LoadSegment ls;
                read_field(seg, "users", ls.users);
                read_field(seg, "slots", ls.duration_slots);
                cfg.schedule.segments.push_back(ls);
            }
        } else {
            throw ConfigError(
                "config: schedule must be a preset name or an array");
        }
    } else {
        cfg.schedule = preset_schedule("small-n");
    }
    read_field(j, "k_all", cfg.k_all);
    read_field(j, "seed", cfg.seed);
    if (j.contains("mode"))
        cfg.mode = measurement_mode_from_name(j.at("mode").get<std::string>());
    if (j.contains("estimators")) {
        cfg.enable_kf = cfg.enable_nn = cfg.enable_raw = false;
        for (const auto& e : j.at("estimators")) {
            std::string name = e.get<std::string>();
            if (name == "kf")
                cfg.enable_kf = true;
            else if (name == "nn")
                cfg.enable_nn = true;
            else if (name == "raw")
                cfg.enable_raw = true;
            else
                throw ConfigError("config: unknown estimator '" + name + "'");
        }
    }
    if (j.contains("kf")) {
        const json& k = j.at("kf");
        reject_unknown(k,
                       {"q_plus", "q_minus", "n0", "v0", "k_all",
                        "cusum_tolerance", "cusum_threshold", "r_model",
                        "slope_delta"},
                       "kf");
        read_field(k, "q_plus", cfg.kf.q_plus);
        read_field(k, "q_minus", cfg.kf.q_minus);
        if (k.contains("n0") && !k.at("n0").is_null())
            cfg.kf.n0 = k.at("n0").get<double>();
        read_field(k, "v0", cfg.kf.v0);
        read_field(k, "k_all", cfg.kf.k_all);
        read_field(k, "cusum_tolerance", cfg.kf.cusum_tolerance);
        read_field(k, "cusum_threshold", cfg.kf.cusum_threshold);
        if (k.contains("r_model")) {
            std::string r = k.at("r_model").get<std::string>();
            if (r == "window")
                cfg.kf.r_model = KfRModel::Window;
            else if (r == "per-tx")
                cfg.kf.r_model = KfRModel::PerTx;
            else
                throw ConfigError(
                    "config: kf.r_model must be window or per-tx");
        }
        read_field(k, "slope_delta", cfg.kf.slope_delta);
    }
    if (j.contains("nn")) {
        const json& n = j.at("nn");
        reject_unknown(n,
                       {"alpha_plus", "alpha_minus", "beta_plus", "beta_minus",
                        "lr_plus", "lr_minus", "cusum_threshold",
                        "cusum_tolerance", "init_seed", "warmup_slots",
                        "input_scale"},
                       "nn");
        read_field(n, "alpha_plus", cfg.nn.alpha_plus);
        read_field(n, "alpha_minus", cfg.nn.alpha_minus);
        read_field(n, "beta_plus", cfg.nn.beta_plus);
        read_field(n, "beta_minus", cfg.nn.beta_minus);
        read_field(n, "lr_plus", cfg.nn.lr_plus);
        read_field(n, "lr_minus", cfg.nn.lr_minus);
        read_field(n, "cusum_threshold", cfg.nn.cusum_threshold);
        read_field(n, "cusum_tolerance", cfg.nn.cusum_tolerance);
        read_field(n, "init_seed", cfg.nn.init_seed);
        read_field(n, "warmup_slots", cfg.nn.warmup_slots);
        read_field(n, "input_scale", cfg.nn.input_scale);
    }
    read_field(j, "out_dir", cfg.out_dir);
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ExperimentConfig::to_json_text() const {
    json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["protocol"] = {{"cw_min", protocol.cw_min},
                     {"max_stage", protocol.max_stage},
                     {"t_success_us", protocol.t_success_us},
                     {"t_collision_us", protocol.t_collision_us},
                     {"t_idle_us", protocol.t_idle_us}};
    json sched = json::array();
    for (const auto& s : schedule.segments)
        sched.push_back({{"users", s.users}, {"slots", s.duration_slots}});
    j["schedule"] = sched;
    j["k_all"] = k_all;
    j["seed"] = seed;
    j["mode"] = measurement_mode_name(mode);
    json est = json::array();
    if (enable_kf) est.push_back("kf");
    if (enable_nn) est.push_back("nn");
    if (enable_raw) est.push_back("raw");
    j["estimators"] = est;
    j["kf"] = {{"q_plus", kf.q_plus},
               {"q_minus", kf.q_minus},
               {"n0", kf.n0 ? json(*kf.n0) : json(nullptr)},
               {"v0", kf.v0},
               {"k_all", kf.k_all},
               {"cusum_tolerance", kf.cusum_tolerance},
               {"cusum_threshold", kf.cusum_threshold},
               {"r_model", kf.r_model == KfRModel::PerTx ? "per-tx" : "window"},
               {"slope_delta", kf.slope_delta}};
    j["nn"] = {{"alpha_plus", nn.alpha_plus},
               {"alpha_minus", nn.alpha_minus},
               {"beta_plus", nn.beta_plus},
               {"beta_minus", nn.beta_minus},
               {"lr_plus", nn.lr_plus},
               {"lr_minus", nn.lr_minus},
               {"cusum_threshold", nn.cusum_threshold},
               {"cusum_tolerance", nn.cusum_tolerance},
               {"init_seed", nn.init_seed},
               {"warmup_slots", nn.warmup_slots},
               {"input_scale", nn.input_scale}};
    if (!out_dir.empty()) j["out_dir"] = out_dir;
    return j.dump(2) + "\n";
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    auto stream =
        run_schedule(cfg.schedule, cfg.k_all, cfg.seed, cfg.protocol, cfg.mode);

    ExperimentResult result;
    result.trace.resize(stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) {
        auto& row = result.trace[i];
        row.t = stream[i].slot;
        row.n_true = stream[i].n_true;
        row.p_hat = stream[i].meas.p_hat;
        if (cfg.enable_raw) row.n_hat_raw = stream[i].meas.n_hat;
    }

    if (cfg.enable_kf) {
        KfConfig kfc = cfg.kf;
        if (kfc.k_all == 0) kfc.k_all = static_cast<int>(cfg.k_all);
        KfState st = kf_init(stream.front().meas.p_hat, kfc, cfg.protocol);
        result.trace[0].n_kf = st.n_est;
        result.trace[0].g_kf = st.cusum.g;
        for (std::size_t i = 1; i < stream.size(); ++i) {
            auto t0 = std::chrono::steady_clock::now();
            kf_step(st, stream[i].meas.p_hat, kfc, cfg.protocol);
            auto t1 = std::chrono::steady_clock::now();
            result.trace[i].n_kf = st.n_est;
            result.trace[i].g_kf = st.cusum.g;
            result.trace[i].kf_step_us = step_us(t0, t1);
        }
    }

    if (cfg.enable_nn) {
        NnState st = nn_init(cfg.nn);
        for (std::size_t i = 0; i < stream.size(); ++i) {
            auto t0 = std::chrono::steady_clock::now();
            NnStepInfo info = nn_step(st, stream[i].meas.n_hat, cfg.nn);
            auto t1 = std::chrono::steady_clock::now();
            auto& row = result.trace[i];
            row.n_nn = std::max(1.0, info.output);  // reporting clamp
            row.g_nn = info.g;
            row.loss = info.loss;
            row.lr = info.lr;
            row.alpha = info.alpha;
            row.nn_step_us = step_us(t0, t1);
        }
    }

    MetricsOptions opt;
    opt.kf_threshold = cfg.kf.cusum_threshold;
    opt.nn_threshold = cfg.nn.cusum_threshold;
    result.metrics = compute_segment_metrics(result.trace, cfg.schedule, opt);
    return result;
}

TimingReport bench_timing(const ExperimentConfig& cfg, int iters, int users) {
    if (iters < 100)
        throw ConfigError("bench: iters must be >= 100, got " +
                          std::to_string(iters));
    if (users < 1) throw ConfigError("bench: users must be >= 1");
    cfg.protocol.validate();
    cfg.kf.validate();
    cfg.nn.validate();
    if (cfg.k_all < 1) throw ConfigError("k_all must be >= 1");

    LoadSchedule sched;
    sched.segments = {{users, static_cast<std::int64_t>(iters) + 1}};
    auto stream =
        run_schedule(sched, cfg.k_all, cfg.seed, cfg.protocol, cfg.mode);

    TimingReport rep;
    rep.iters = iters;
    rep.users = users;

    double observe_acc = 0.0;
    for (std::size_t i = 1; i < stream.size(); ++i)
        observe_acc += stream[i].meas.elapsed_us;
    rep.observe_mean_us = observe_acc / static_cast<double>(iters);

    std::vector<double> kf_times, nn_times;
    kf_times.reserve(static_cast<std::size_t>(iters));
    nn_times.reserve(static_cast<std::size_t>(iters));

    KfConfig kfc = cfg.kf;
    if (kfc.k_all == 0) kfc.k_all = static_cast<int>(cfg.k_all);
    KfState kst = kf_init(stream.front().meas.p_hat, kfc, cfg.protocol);
    for (std::size_t i = 1; i < stream.size(); ++i) {
        auto t0 = std::chrono::steady_clock::now();
        kf_step(kst, stream[i].meas.p_hat, kfc, cfg.protocol);
        auto t1 = std::chrono::steady_clock::now();
        kf_times.push_back(step_us(t0, t1));
    }

    NnState nst = nn_init(cfg.nn);
    nn_step(nst, stream.front().meas.n_hat, cfg.nn);  // untimed warm step
    for (std::size_t i = 1; i < stream.size(); ++i) {
        auto t0 = std::chrono::steady_clock::now();
        nn_step(nst, stream[i].meas.n_hat, cfg.nn);
        auto t1 = std::chrono::steady_clock::now();
        nn_times.push_back(step_us(t0, t1));
    }

    auto mean = [](const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return acc / static_cast<double>(v.size());
    };
    auto median = [](std::vector<double> v) {
        auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
        std::nth_element(v.begin(), mid, v.end());
        return *mid;
    };
    rep.kf_mean_us = mean(kf_times);
    rep.kf_median_us = median(kf_times);
    rep.nn_mean_us = mean(nn_times);
    rep.nn_median_us = median(nn_times);
    rep.kf_slot_total_us = rep.observe_mean_us + rep.kf_mean_us;
    rep.nn_slot_total_us = rep.observe_mean_us + rep.nn_mean_us;
    return rep;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    spec.base.validate();
    auto q_minus = spec.kf_q_minus.empty()
                       ? std::vector<double>{spec.base.kf.q_minus}
                       : spec.kf_q_minus;
    auto kf_tol = spec.kf_cusum_tolerance.empty()
                      ? std::vector<double>{spec.base.kf.cusum_tolerance}
                      : spec.kf_cusum_tolerance;
    auto nn_e = spec.nn_threshold.empty()
                    ? std::vector<double>{spec.base.nn.cusum_threshold}
                    : spec.nn_threshold;
    auto seeds = spec.seeds.empty() ? std::vector<std::uint64_t>{spec.base.seed}
                                    : spec.seeds;

    struct Job {
        double q_minus, kf_tol, nn_e;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (double qm : q_minus)
        for (double qt : kf_tol)
            for (double ne : nn_e)
                for (std::uint64_t sd : seeds)
                    jobs.push_back(Job{qm, qt, ne, sd});

    std::vector<std::vector<SegmentMetrics>> results(jobs.size());
    std::atomic<std::size_t> next{0};
    unsigned workers = spec.threads > 0
                           ? static_cast<unsigned>(spec.threads)
                           : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers,
                                 static_cast<unsigned>(jobs.size()));
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                ExperimentConfig cfg = spec.base;
                cfg.kf.q_minus = jobs[i].q_minus;
                if (cfg.kf.q_plus < cfg.kf.q_minus)
                    cfg.kf.q_plus = cfg.kf.q_minus;
                cfg.kf.cusum_tolerance = jobs[i].kf_tol;
                cfg.nn.cusum_threshold = jobs[i].nn_e;
                cfg.seed = jobs[i].seed;
                results[i] = run_experiment(cfg).metrics;
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < jobs.size(); ++i)
        for (const auto& m : results[i])
            rows.push_back(SweepRow{jobs[i].q_minus, jobs[i].kf_tol,
                                    jobs[i].nn_e, jobs[i].seed, m});
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
    out << "q_minus,kf_tolerance,nn_threshold,seed,segment,n_true,rmse_raw,"
           "rmse_kf,rmse_nn,convergence_kf,convergence_nn,detect_kf,"
           "detect_nn,tail_triggers_kf,tail_triggers_nn\n";
    char buf[40];
    auto real = [&](std::string& row, const std::optional<double>& v) {
        row += ',';
        if (v) {
            std::snprintf(buf, sizeof buf, "%.17g", *v);
            row += buf;
        }
    };
    auto integer = [&](std::string& row, const std::optional<std::int64_t>& v) {
        row += ',';
        if (v) row += std::to_string(*v);
    };
    for (const auto& r : rows) {
        std::string row;
        std::snprintf(buf, sizeof buf, "%.17g", r.q_minus);
        row += buf;
        std::snprintf(buf, sizeof buf, ",%.17g", r.kf_tolerance);
        row += buf;
        std::snprintf(buf, sizeof buf, ",%.17g", r.nn_threshold);
        row += buf;
        row += ',';
        row += std::to_string(r.seed);
        row += ',';
        row += std::to_string(r.metrics.segment);
        row += ',';
        row += std::to_string(r.metrics.n_true);
        real(row, r.metrics.rmse_raw);
        real(row, r.metrics.rmse_kf);
        real(row, r.metrics.rmse_nn);
        integer(row, r.metrics.convergence_kf);
        integer(row, r.metrics.convergence_nn);
        integer(row, r.metrics.detect_kf);
        integer(row, r.metrics.detect_nn);
        integer(row, r.metrics.tail_triggers_kf);
        integer(row, r.metrics.tail_triggers_nn);
        row += '\n';
        out << row;
    }
}

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_sweep_csv(rows, out);
    out.flush();
    if (!out) throw ConfigError("write failed: " + path.string());
}

}  // namespace wifiload
