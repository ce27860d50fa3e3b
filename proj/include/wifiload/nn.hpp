#pragma once

// Online unsupervised MLP estimator: forward pass on [prev_output, n_hat],
// adaptive two-term loss, CUSUM-driven regime switching, Adam-based
// backprop — implemented from first principles.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "wifiload/cusum.hpp"

namespace wifiload {

enum class Activation { Tanh, None };

struct MlpParams {
    std::vector<int> sizes;             // e.g. {2, 32, 16, 8, 4, 1}
    std::vector<Activation> acts;       // one per non-input layer
    std::vector<std::vector<double>> w; // w[l]: sizes[l+1] x sizes[l], row-major
    std::vector<std::vector<double>> b; // b[l]: sizes[l+1]

    int layer_count() const { return static_cast<int>(acts.size()); }
    std::size_t parameter_count() const;
};

// Symmetric uniform init with limit sqrt(6/(fan_in+fan_out)), zero biases.
MlpParams make_mlp(const std::vector<int>& sizes,
                   const std::vector<Activation>& acts, std::uint64_t seed);

// The prescribed topology: 2-32-16-8-4-1 with tanh/tanh/tanh/none and a
// linear output layer.
MlpParams default_mlp(std::uint64_t seed);

// Gradient (or moment) storage shaped like MlpParams.
struct MlpGrads {
    std::vector<std::vector<double>> w, b;
};
MlpGrads zero_grads_like(const MlpParams& params);

// Forward pass storing every layer's output in acts (acts[0] = input).
// Returns the scalar network output.
double mlp_forward_trace(const MlpParams& params, double in0, double in1,
                         std::vector<std::vector<double>>& acts);

// Convenience forward without keeping activations.
double mlp_forward(const MlpParams& params, double in0, double in1);

// Backprop of a scalar loss with dL/d(output) = dl_do through the stored
// activations; writes parameter gradients into out.
void mlp_backward(const MlpParams& params,
                  const std::vector<std::vector<double>>& acts, double dl_do,
                  MlpGrads& out);

struct AdamState {
    MlpGrads m, v;          // first and second moment accumulators
    std::int64_t step = 0;  // bias-correction counter
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};
AdamState make_adam(const MlpParams& params);

// One Adam update with bias correction.
void adam_apply(MlpParams& params, AdamState& adam, const MlpGrads& grads,
                double lr);

// L = alpha (o - n_hat)^2 / 2 + beta (o - prev)^2 / 2.
double nn_loss(double o, double n_hat, double prev, double alpha, double beta);

enum class Regime { Stable, Changed };

struct NnConfig {
    double alpha_plus = 0.99;   // measurement weight, changed regime
    double alpha_minus = 0.01;  // measurement weight, stable regime
    double beta_plus = 0.99;    // prediction weight, stable regime
    double beta_minus = 0.01;   // prediction weight, changed regime
    double lr_plus = 0.1;       // learning rate, changed regime
    double lr_minus = 0.01;     // learning rate, stable regime
    double cusum_threshold = 20.0;  // e_d
    double cusum_tolerance = 0.1;   // q
    std::uint64_t init_seed = 1;
    int warmup_slots = 50;    // regime forced to Changed for the first slots
    double input_scale = 1.0; // multiplies both inputs (default: raw scale)

    void validate() const;
};

struct NnState {
    MlpParams params;
    AdamState adam;
    CusumState cusum;
    double prev_output = 0.0;  // raw (unclamped) previous output
    Regime regime = Regime::Changed;
    std::int64_t slot = 0;

    // reusable training workspace
    std::vector<std::vector<double>> acts_ws;
    MlpGrads grads_ws;
};

// Fresh state: seeded init, prev_output = 0, g = 0, regime = Changed.
// Runs a sampled gradient self-check (throws EstimatorError on failure).
NnState nn_init(const NnConfig& cfg);

struct NnStepInfo {
    double output = 0.0;   // raw o_t (clamp to >= 1 for reporting)
    double loss = 0.0;     // line-12 loss (the one backpropagated)
    double lr = 0.0;       // learning rate applied
    double alpha = 0.0;    // measurement weight applied
    double g = 0.0;        // detector accumulator after the update
    bool triggered = false;
};

// One Algorithm-1 step: forward; line-5 loss with the current regime's
// (alpha, beta); CUSUM update with that loss; regime switch (warm-up forces
// Changed); line-12 loss with the new coefficients; backprop + one Adam
// update with the selected learning rate; prev_output <- o_t.
NnStepInfo nn_step(NnState& state, double n_hat, const NnConfig& cfg);

// Versioned text serialization of the parameters (hex floats, lossless).
void save_mlp(const MlpParams& params, std::ostream& out);
void save_mlp(const MlpParams& params, const std::filesystem::path& path);
MlpParams load_mlp(std::istream& in);
MlpParams load_mlp(const std::filesystem::path& path);

}  // namespace wifiload
