#pragma once

// Extended Kalman filter tracking the user count n from p_hat measurements,
// with CUSUM-switched process noise Q in {q_minus, q_plus}.

#include <cstdint>
#include <optional>
#include <vector>

#include "wifiload/bianchi.hpp"
#include "wifiload/cusum.hpp"
#include "wifiload/dcf_sim.hpp"

namespace wifiload {

// Which sample count the measurement-variance formula R = h(1-h)/samples
// uses. Window is the literal per-window form (samples = k_all); PerTx
// matches the PerTxCollision measurement mode, whose per-window sample count
// is the modeled number of transmissions n_est * tau * k_all.
enum class KfRModel { Window, PerTx };

struct KfConfig {
    double q_plus = 4.0;   // process noise while the detector is triggered
    double q_minus = 0.0;  // process noise in the stable regime
    std::optional<double> n0;  // initial estimate; empty = from first p_hat
    double v0 = 4.0;           // initial error variance
    int k_all = 0;             // window size for R; 0 = inherit experiment's
    double cusum_tolerance = 1.2;   // q_k for the normalized-innovation CUSUM
    double cusum_threshold = 30.0;  // e_k
    KfRModel r_model = KfRModel::Window;
    double slope_delta = 1e-3;  // finite-difference step for h'

    void validate() const;
};

struct KfState {
    double n_est = 1.0;      // current estimate, >= 1
    double v = 0.0;          // error variance, > 0 after every update
    CusumState cusum;        // normalized-innovation detector
    double last_innovation = 0.0;  // Z of the most recent step
    double last_gain = 0.0;        // K of the most recent step
    std::int64_t slot = 0;         // steps consumed (for diagnostics)

    explicit KfState(const KfConfig& cfg)
        : cusum(cfg.cusum_tolerance, cfg.cusum_threshold) {}
};

// Initial state from the first measurement (or cfg.n0 when set).
KfState kf_init(double first_p_hat, const KfConfig& cfg,
                const ProtocolParams& params);

// One filter update, in order: h = h(n_est); h' = slope; Z = p_hat - h;
// R = h(1-h)/samples; Q by the detector regime of the previous step;
// K = h'(V+Q) / (h'^2 (V+Q) + R); n' = max(1, n + K Z); V' = (1 - K h')(V+Q);
// then the CUSUM consumes Z^2 / (h'^2 (V+Q) + R) and selects the next Q.
// Throws EstimatorError on any non-finite intermediate.
void kf_step(KfState& state, double p_hat, const KfConfig& cfg,
             const ProtocolParams& params);

struct KfTraceRow {
    double n_est = 0.0;
    double v = 0.0;
    double innovation = 0.0;
    double gain = 0.0;
    double g = 0.0;
    bool q_plus_active = false;
};

// Folds kf_step over a measurement stream. The first measurement seeds the
// state; each subsequent one is a filter update.
std::vector<KfTraceRow> kf_run(const std::vector<TaggedMeasurement>& stream,
                               const KfConfig& cfg,
                               const ProtocolParams& params);

}  // namespace wifiload
