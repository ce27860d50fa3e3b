#include "wifiload/kf.hpp"

#include <cmath>
#include <string>

#include "wifiload/errors.hpp"

namespace wifiload {

namespace {

// Measurement variance R. The binomial form h(1-h)/samples, floored at the
// measurement-clamp level so R (and hence V) can never collapse to 0 at the
// n_est = 1 boundary where h = 0.
double measurement_variance(double h, double n_est, std::int64_t k_all,
                            const KfConfig& cfg, const ProtocolParams& params) {
    double samples = static_cast<double>(k_all);
    if (cfg.r_model == KfRModel::PerTx) {
        double tau = tau_of_p(h, params);
        samples = n_est * tau * static_cast<double>(k_all);
        if (samples < 1.0) samples = 1.0;
    }
    double var = h * (1.0 - h);
    double floor = kProbFloor * (1.0 - kProbFloor);
    if (var < floor) var = floor;
    return var / samples;
}

}  // namespace

void KfConfig::validate() const {
    if (!(q_plus >= q_minus) || !(q_minus >= 0.0))
        throw ConfigError("kf: need q_plus >= q_minus >= 0");
    if (n0 && !(*n0 >= 1.0)) throw ConfigError("kf.n0 must be >= 1");
    if (!(v0 > 0.0)) throw ConfigError("kf.v0 must be > 0");
    if (k_all < 0) throw ConfigError("kf.k_all must be >= 0 (0 = inherit)");
    if (!(cusum_tolerance > 0.0) || !(cusum_threshold > 0.0))
        throw ConfigError("kf: CUSUM tolerance and threshold must be > 0");
    if (!(slope_delta > 0.0)) throw ConfigError("kf.slope_delta must be > 0");
}

KfState kf_init(double first_p_hat, const KfConfig& cfg,
                const ProtocolParams& params) {
    cfg.validate();
    KfState st(cfg);
    st.n_est = cfg.n0 ? *cfg.n0 : users_of_p_clamped(first_p_hat, params);
    if (st.n_est < 1.0) st.n_est = 1.0;
    st.v = cfg.v0;
    return st;
}

void kf_step(KfState& state, double p_hat, const KfConfig& cfg,
             const ProtocolParams& params) {
    if (!std::isfinite(p_hat))
        throw EstimatorError("kf_step: non-finite measurement", state.slot);
    std::int64_t k_all = cfg.k_all > 0 ? cfg.k_all : 100;
    double h;
    double hp;
    try {
        h = collision_of_users(state.n_est, params);
        hp = collision_slope(state.n_est, params, cfg.slope_delta);
    } catch (const std::exception& e) {
        throw EstimatorError(std::string("kf_step: model inversion failed: ") +
                                 e.what(),
                             state.slot);
    }
    double pc = clamp_probability(p_hat);
    double z = pc - h;
    double r = measurement_variance(h, state.n_est, k_all, cfg, params);
    double q = state.cusum.triggered ? cfg.q_plus : cfg.q_minus;
    double vq = state.v + q;
    double s = hp * hp * vq + r;
    double k = hp * vq / s;
    double n_next = state.n_est + k * z;
    if (n_next < 1.0) n_next = 1.0;
    double v_next = (1.0 - k * hp) * vq;
    double stat = z * z / s;
    if (!std::isfinite(n_next) || !std::isfinite(v_next) ||
        !std::isfinite(stat) || !(v_next > 0.0))
        throw EstimatorError("kf_step: non-finite state", state.slot);
    state.n_est = n_next;
    state.v = v_next;
    state.last_innovation = z;
    state.last_gain = k;
    state.cusum.update(stat);  // selects Q for the next step
    ++state.slot;
}

std::vector<KfTraceRow> kf_run(const std::vector<TaggedMeasurement>& stream,
                               const KfConfig& cfg,
                               const ProtocolParams& params) {
    if (stream.empty()) throw ConfigError("kf_run: empty measurement stream");
    std::vector<KfTraceRow> out;
    out.reserve(stream.size());
    KfState st = kf_init(stream.front().meas.p_hat, cfg, params);
    out.push_back(KfTraceRow{st.n_est, st.v, 0.0, 0.0, st.cusum.g, false});
    for (std::size_t i = 1; i < stream.size(); ++i) {
        bool q_plus_active = st.cusum.triggered;
        kf_step(st, stream[i].meas.p_hat, cfg, params);
        out.push_back(KfTraceRow{st.n_est, st.v, st.last_innovation,
                                 st.last_gain, st.cusum.g, q_plus_active});
    }
    return out;
}

}  // namespace wifiload
