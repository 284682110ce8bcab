#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thindiff/matrix.hpp"
#include "thindiff/rng.hpp"
#include "thindiff/schedule.hpp"

namespace thindiff {

struct Layer {
    RealMatrix w;           // out x in
    std::vector<double> b;  // out
};

// Feedforward regressor for the remaining counts y = x0 - x_t.
//
// Input row: [x_t / input_scale, p(t), 1 - p(t), class embedding]; tanh
// hidden layers; linear final layer passed through softplus, so outputs are
// strictly positive. The class embedding table has n_classes + 1 rows; row 0
// is the null class, pinned to zero and excluded from the parameter set, so
// an unconditional pass is exactly "embedding zeroed".
struct Predictor {
    int data_dim = 0;
    PSchedule schedule;
    std::vector<double> input_scale;  // per-dimension divisors, >= 1
    int n_classes = 0;
    int embed_dim = 0;
    RealMatrix class_embed;  // (n_classes+1) x embed_dim
    std::vector<Layer> layers;

    int input_width() const {
        return data_dim + 2 + (n_classes > 0 ? embed_dim : 0);
    }
    std::vector<int> layer_dims() const;
    std::size_t param_count() const;
};

// Hidden layers get variance-preserving uniform init; the final layer is
// zero-initialized (cold-start prediction softplus(0) = log 2); embeddings
// start at zero so conditional and unconditional passes initially agree.
Predictor make_predictor(int data_dim, const std::vector<int>& hidden_dims,
                         const PSchedule& schedule, int n_classes, int embed_dim,
                         RngHandle& rng);

// Flattened parameter access in a fixed order (per layer: weights row-major,
// then bias; then class embedding rows 1..C). Used by Adam and by
// finite-difference checks.
std::vector<double> get_params(const Predictor& model);
void set_params(Predictor& model, const std::vector<double>& params);

// Batch prediction at one shared time t. class_ids, when present, holds one
// id per row in {0..n_classes} (0 = null class).
RealMatrix predict(const Predictor& model, const CountMatrix& x_t, double t,
                   const std::vector<int>* class_ids = nullptr);

// Per-row times; the training loop draws one t per batch element.
RealMatrix predict_rows(const Predictor& model, const CountMatrix& x_t,
                        const std::vector<double>& ts,
                        const std::vector<int>* class_ids = nullptr);

// w * mean over entries of (y_hat - y * log y_hat); the log term vanishes
// where y = 0.
double loss(const RealMatrix& y_hat, const CountMatrix& y, double w);

struct Gradients {
    std::vector<Layer> layers;
    RealMatrix class_embed;  // row 0 always zero
};

// Exact reverse-mode gradients of loss(predict(...), y, w).
Gradients grad(const Predictor& model, const CountMatrix& x_t, double t,
               const std::vector<int>* class_ids, const CountMatrix& y, double w);

// Per-row (t, w) variant; returns the batch loss through *loss_out when set.
Gradients grad_rows(const Predictor& model, const CountMatrix& x_t,
                    const std::vector<double>& ts, const std::vector<double>& ws,
                    const std::vector<int>* class_ids, const CountMatrix& y,
                    double* loss_out = nullptr);

struct TrainConfig {
    int batch_size = 128;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int max_steps = 4000;
    double p_uncond = 0.1;  // chance of zeroing the class embedding per example
    WeightSpec weight_spec;
    PSchedule schedule;
    std::uint64_t seed = 1;
    std::vector<int> hidden_dims{48};
    int embed_dim = 8;
};

struct AdamState {
    std::int64_t step = 0;
    std::vector<double> m;
    std::vector<double> v;
};

AdamState make_adam_state(const Predictor& model);

// Standard Adam with bias correction.
void adam_step(Predictor& model, const Gradients& grads, AdamState& state,
               const TrainConfig& config);

struct TrainResult {
    Predictor model;
    std::vector<double> loss_trace;  // one weighted batch loss per step
    double dropped_class_fraction = 0.0;
};

// The training loop: per step draw a minibatch with replacement, one
// t ~ Uniform(0,1) per element, thin to x_t, regress y = x0 - x_t under the
// configured weight. Labels, when present, give each example its class id;
// the embedding is zeroed with probability p_uncond per example. Throws
// NumericalAbort with the step index if the loss leaves the finite range.
TrainResult train(const CountMatrix& dataset, const std::vector<int>* labels,
                  const TrainConfig& config);

// Self-describing JSON checkpoint holding dimensions, parameters, the
// schedule identifier, and the training config echo. save -> load -> save
// reproduces the file byte for byte.
void save_checkpoint(const Predictor& model, const TrainConfig& config,
                     const std::string& path);

struct Checkpoint {
    Predictor model;
    TrainConfig config;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace thindiff
