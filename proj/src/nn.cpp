#include "wifiload/nn.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "wifiload/errors.hpp"

namespace wifiload {

std::size_t MlpParams::parameter_count() const {
    std::size_t n = 0;
    for (int l = 0; l < layer_count(); ++l) n += w[l].size() + b[l].size();
    return n;
}

MlpParams make_mlp(const std::vector<int>& sizes,
                   const std::vector<Activation>& acts, std::uint64_t seed) {
    if (sizes.size() < 2) throw ConfigError("mlp: need at least two layers");
    if (acts.size() != sizes.size() - 1)
        throw ConfigError("mlp: need one activation per non-input layer");
    for (int s : sizes)
        if (s < 1) throw ConfigError("mlp: layer sizes must be >= 1");
    MlpParams p;
    p.sizes = sizes;
    p.acts = acts;
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        int fan_in = sizes[l];
        int fan_out = sizes[l + 1];
        double lim = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-lim, lim);
        std::vector<double> wl(static_cast<std::size_t>(fan_in) *
                               static_cast<std::size_t>(fan_out));
        for (auto& x : wl) x = dist(rng);
        p.w.push_back(std::move(wl));
        p.b.emplace_back(static_cast<std::size_t>(fan_out), 0.0);
    }
    return p;
}

MlpParams default_mlp(std::uint64_t seed) {
    return make_mlp({2, 32, 16, 8, 4, 1},
                    {Activation::Tanh, Activation::Tanh, Activation::Tanh,
                     Activation::None, Activation::None},
                    seed);
}

MlpGrads zero_grads_like(const MlpParams& params) {
    MlpGrads g;
    for (int l = 0; l < params.layer_count(); ++l) {
        g.w.emplace_back(params.w[l].size(), 0.0);
        g.b.emplace_back(params.b[l].size(), 0.0);
    }
    return g;
}

double mlp_forward_trace(const MlpParams& params, double in0, double in1,
                         std::vector<std::vector<double>>& acts) {
    int layers = params.layer_count();
    acts.resize(static_cast<std::size_t>(layers) + 1);
    acts[0].assign({in0, in1});
    for (int l = 0; l < layers; ++l) {
        const auto& prev = acts[static_cast<std::size_t>(l)];
        auto& cur = acts[static_cast<std::size_t>(l) + 1];
        int rows = params.sizes[static_cast<std::size_t>(l) + 1];
        int cols = params.sizes[static_cast<std::size_t>(l)];
        cur.resize(static_cast<std::size_t>(rows));
        const double* w = params.w[static_cast<std::size_t>(l)].data();
        for (int r = 0; r < rows; ++r) {
            double z = params.b[static_cast<std::size_t>(l)]
                               [static_cast<std::size_t>(r)];
            const double* wr = w + static_cast<std::size_t>(r) *
                                       static_cast<std::size_t>(cols);
            for (int c = 0; c < cols; ++c)
                z += wr[c] * prev[static_cast<std::size_t>(c)];
            cur[static_cast<std::size_t>(r)] =
                params.acts[static_cast<std::size_t>(l)] == Activation::Tanh
                    ? std::tanh(z)
                    : z;
        }
    }
    return acts.back()[0];
}

double mlp_forward(const MlpParams& params, double in0, double in1) {
    std::vector<std::vector<double>> acts;
    return mlp_forward_trace(params, in0, in1, acts);
}

void mlp_backward(const MlpParams& params,
                  const std::vector<std::vector<double>>& acts, double dl_do,
                  MlpGrads& out) {
    int layers = params.layer_count();
    if (out.w.size() != static_cast<std::size_t>(layers))
        out = zero_grads_like(params);
    // delta starts as dL/d(output vector) and walks back to dL/d(activation).
    std::vector<double> delta{dl_do};
    std::vector<double> delta_prev;
    for (int l = layers - 1; l >= 0; --l) {
        const auto& a_out = acts[static_cast<std::size_t>(l) + 1];
        const auto& a_in = acts[static_cast<std::size_t>(l)];
        int rows = params.sizes[static_cast<std::size_t>(l) + 1];
        int cols = params.sizes[static_cast<std::size_t>(l)];
        // dL/dz from dL/da through the activation.
        if (params.acts[static_cast<std::size_t>(l)] == Activation::Tanh)
            for (int r = 0; r < rows; ++r) {
                double a = a_out[static_cast<std::size_t>(r)];
                delta[static_cast<std::size_t>(r)] *= 1.0 - a * a;
            }
        auto& gw = out.w[static_cast<std::size_t>(l)];
        auto& gb = out.b[static_cast<std::size_t>(l)];
        const double* w = params.w[static_cast<std::size_t>(l)].data();
        delta_prev.assign(static_cast<std::size_t>(cols), 0.0);
        for (int r = 0; r < rows; ++r) {
            double d = delta[static_cast<std::size_t>(r)];
            gb[static_cast<std::size_t>(r)] = d;
            double* gwr = gw.data() + static_cast<std::size_t>(r) *
                                          static_cast<std::size_t>(cols);
            const double* wr = w + static_cast<std::size_t>(r) *
                                       static_cast<std::size_t>(cols);
            for (int c = 0; c < cols; ++c) {
                gwr[c] = d * a_in[static_cast<std::size_t>(c)];
                delta_prev[static_cast<std::size_t>(c)] += d * wr[c];
            }
        }
        delta.swap(delta_prev);
    }
}

AdamState make_adam(const MlpParams& params) {
    AdamState a;
    a.m = zero_grads_like(params);
    a.v = zero_grads_like(params);
    return a;
}

void adam_apply(MlpParams& params, AdamState& adam, const MlpGrads& grads,
                double lr) {
    ++adam.step;
    double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step));
    double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step));
    for (int l = 0; l < params.layer_count(); ++l) {
        auto update = [&](std::vector<double>& theta,
                          const std::vector<double>& g, std::vector<double>& m,
                          std::vector<double>& v) {
            for (std::size_t i = 0; i < theta.size(); ++i) {
                m[i] = adam.beta1 * m[i] + (1.0 - adam.beta1) * g[i];
                v[i] = adam.beta2 * v[i] + (1.0 - adam.beta2) * g[i] * g[i];
                double mhat = m[i] / bc1;
                double vhat = v[i] / bc2;
                theta[i] -= lr * mhat / (std::sqrt(vhat) + adam.epsilon);
            }
        };
        update(params.w[static_cast<std::size_t>(l)],
               grads.w[static_cast<std::size_t>(l)],
               adam.m.w[static_cast<std::size_t>(l)],
               adam.v.w[static_cast<std::size_t>(l)]);
        update(params.b[static_cast<std::size_t>(l)],
               grads.b[static_cast<std::size_t>(l)],
               adam.m.b[static_cast<std::size_t>(l)],
               adam.v.b[static_cast<std::size_t>(l)]);
    }
}

double nn_loss(double o, double n_hat, double prev, double alpha,
               double beta) {
    double em = o - n_hat;
    double ep = o - prev;
    return 0.5 * alpha * em * em + 0.5 * beta * ep * ep;
}

void NnConfig::validate() const {
    auto in_unit = [](double x) { return x > 0.0 && x <= 1.0; };
    if (!in_unit(alpha_plus) || !in_unit(alpha_minus) || !in_unit(beta_plus) ||
        !in_unit(beta_minus))
        throw ConfigError("nn: alpha/beta weights must be in (0,1]");
    if (!(lr_plus > 0.0) || !(lr_minus > 0.0))
        throw ConfigError("nn: learning rates must be > 0");
    if (!(cusum_threshold > 0.0) || !(cusum_tolerance > 0.0))
        throw ConfigError("nn: CUSUM threshold and tolerance must be > 0");
    if (warmup_slots < 0) throw ConfigError("nn.warmup_slots must be >= 0");
    if (!(input_scale > 0.0)) throw ConfigError("nn.input_scale must be > 0");
}

namespace {

// Sampled gradient self-check run at init: backprop vs central differences
// over a deterministic spread of parameters.
void init_gradient_check(const MlpParams& params) {
    MlpParams p = params;  // locally perturbed copy
    const double prev = 2.0, n_hat = 5.0, alpha = 0.99, beta = 0.01;
    std::vector<std::vector<double>> acts;
    double o = mlp_forward_trace(p, prev, n_hat, acts);
    MlpGrads bp = zero_grads_like(p);
    mlp_backward(p, acts, alpha * (o - n_hat) + beta * (o - prev), bp);

    std::size_t total = p.parameter_count();
    std::size_t stride = total / 24 + 1;
    auto loss_at = [&](const MlpParams& q) {
        double out = mlp_forward(q, prev, n_hat);
        return nn_loss(out, n_hat, prev, alpha, beta);
    };
    std::size_t flat = 0;
    for (int l = 0; l < p.layer_count(); ++l) {
        for (int which = 0; which < 2; ++which) {
            auto& theta = which == 0 ? p.w[static_cast<std::size_t>(l)]
                                     : p.b[static_cast<std::size_t>(l)];
            const auto& g = which == 0 ? bp.w[static_cast<std::size_t>(l)]
                                       : bp.b[static_cast<std::size_t>(l)];
            for (std::size_t i = 0; i < theta.size(); ++i, ++flat) {
                if (flat % stride != 0) continue;
                double save = theta[i];
                double h = 1e-5 * std::max(1.0, std::fabs(save));
                theta[i] = save + h;
                double lp = loss_at(p);
                theta[i] = save - h;
                double lm = loss_at(p);
                theta[i] = save;
                double fd = (lp - lm) / (2.0 * h);
                double scale =
                    std::max({std::fabs(fd), std::fabs(g[i]), 1e-4});
                if (std::fabs(fd - g[i]) > 1e-4 * scale)
                    throw EstimatorError(
                        "nn init: gradient self-check failed", 0);
            }
        }
    }
}

}  // namespace

NnState nn_init(const NnConfig& cfg) {
    cfg.validate();
    NnState st{default_mlp(cfg.init_seed),
               AdamState{},
               CusumState(cfg.cusum_tolerance, cfg.cusum_threshold),
               0.0,
               Regime::Changed,
               0,
               {},
               {}};
    st.adam = make_adam(st.params);
    st.grads_ws = zero_grads_like(st.params);
    init_gradient_check(st.params);
    return st;
}

NnStepInfo nn_step(NnState& state, double n_hat, const NnConfig& cfg) {
    if (n_hat < 1.0) n_hat = 1.0;  // upstream contract, held defensively
    double o = mlp_forward_trace(state.params, state.prev_output * cfg.input_scale,
                                 n_hat * cfg.input_scale, state.acts_ws);
    if (!std::isfinite(o))
        throw EstimatorError("nn_step: non-finite output", state.slot);

    // Line 5: loss under the regime carried over from the previous step.
    bool changed = state.regime == Regime::Changed;
    double l5 = nn_loss(o, n_hat, state.prev_output,
                        changed ? cfg.alpha_plus : cfg.alpha_minus,
                        changed ? cfg.beta_minus : cfg.beta_plus);
    // Line 6: detector consumes the line-5 loss.
    state.cusum.update(l5);
    // Lines 7-11: regime for this update (warm-up forces Changed).
    changed = state.cusum.triggered || state.slot < cfg.warmup_slots;
    state.regime = changed ? Regime::Changed : Regime::Stable;
    double alpha = changed ? cfg.alpha_plus : cfg.alpha_minus;
    double beta = changed ? cfg.beta_minus : cfg.beta_plus;
    double lr = changed ? cfg.lr_plus : cfg.lr_minus;
    // Line 12: loss under the selected coefficients.
    double l12 = nn_loss(o, n_hat, state.prev_output, alpha, beta);
    // Line 13: one gradient step.
    double dl_do = alpha * (o - n_hat) + beta * (o - state.prev_output);
    mlp_backward(state.params, state.acts_ws, dl_do, state.grads_ws);
    adam_apply(state.params, state.adam, state.grads_ws, lr);
    // A non-finite parameter needs no scan here: it propagates to the output
    // and trips the isfinite(o) check on the next step.
    state.prev_output = o;
    ++state.slot;
    return NnStepInfo{o, l12, lr, alpha, state.cusum.g,
                      state.cusum.triggered};
}

void save_mlp(const MlpParams& params, std::ostream& out) {
    out << "wifiload-mlp 1\n";
    out << "sizes";
    for (int s : params.sizes) out << ' ' << s;
    out << "\nacts";
    for (Activation a : params.acts)
        out << ' ' << (a == Activation::Tanh ? "tanh" : "none");
    out << '\n';
    char buf[64];
    auto dump = [&](const char* tag, int l, const std::vector<double>& v) {
        out << tag << l;
        for (double x : v) {
            std::snprintf(buf, sizeof buf, " %a", x);
            out << buf;
        }
        out << '\n';
    };
    for (int l = 0; l < params.layer_count(); ++l) {
        dump("w", l, params.w[static_cast<std::size_t>(l)]);
        dump("b", l, params.b[static_cast<std::size_t>(l)]);
    }
}

void save_mlp(const MlpParams& params, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    save_mlp(params, out);
    if (!out) throw ConfigError("write failed: " + path.string());
}

MlpParams load_mlp(std::istream& in) {
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "wifiload-mlp" || version != 1)
        throw ConfigError("mlp file: unrecognized header");
    std::string tag;
    in >> tag;
    if (tag != "sizes") throw ConfigError("mlp file: expected sizes");
    std::string line;
    std::getline(in, line);
    std::istringstream sl(line);
    std::vector<int> sizes;
    int s;
    while (sl >> s) sizes.push_back(s);
    in >> tag;
    if (tag != "acts") throw ConfigError("mlp file: expected acts");
    std::getline(in, line);
    std::istringstream al(line);
    std::vector<Activation> acts;
    std::string a;
    while (al >> a) {
        if (a == "tanh")
            acts.push_back(Activation::Tanh);
        else if (a == "none")
            acts.push_back(Activation::None);
        else
            throw ConfigError("mlp file: unknown activation " + a);
    }
    if (sizes.size() < 2 || acts.size() != sizes.size() - 1)
        throw ConfigError("mlp file: inconsistent shape");
    MlpParams p;
    p.sizes = sizes;
    p.acts = acts;
    auto read_vec = (
        [&](const char* want, int l, std::size_t count) {
            in >> tag;
            if (tag != want + std::to_string(l))
                throw ConfigError("mlp file: expected " + std::string(want) +
                                  std::to_string(l));
            std::vector<double> v(count);
            std::string tok;
            for (auto& x : v) {
                if (!(in >> tok))
                    throw ConfigError("mlp file: truncated values");
                char* end = nullptr;
                x = std::strtod(tok.c_str(), &end);
                if (end == tok.c_str())
                    throw ConfigError("mlp file: bad number " + tok);
            }
            return v;
        });
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        auto rows = static_cast<std::size_t>(sizes[l + 1]);
        auto cols = static_cast<std::size_t>(sizes[l]);
        p.w.push_back(read_vec("w", static_cast<int>(l), rows * cols));
        p.b.push_back(read_vec("b", static_cast<int>(l), rows));
    }
    return p;
}

MlpParams load_mlp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    return load_mlp(in);
}

}  // namespace wifiload
