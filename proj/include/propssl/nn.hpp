#pragma once

#include <cstdint>
#include <string>

#include "propssl/matrix.hpp"
#include "propssl/rng.hpp"

namespace propssl::nn {

// One-hidden-layer MLP (d -> h -> K, rectifier nonlinearity) with the SGD
// momentum buffers stored alongside the parameters they belong to.
struct ModelParams {
    Matrix w1, b1, w2, b2;      // b1/b2 are 1-row matrices
    Matrix vw1, vb1, vw2, vb2;  // momentum buffers, same shapes

    int feature_dim() const { return static_cast<int>(w1.rows()); }
    int hidden() const { return static_cast<int>(w1.cols()); }
    int num_classes() const { return static_cast<int>(w2.cols()); }
};

struct Gradients {
    Matrix w1, b1, w2, b2;
};

// Everything backward needs from the forward pass: the input batch, the
// post-rectifier hidden activations (their sign doubles as the rectifier
// derivative mask), and the logits.
struct ForwardCache {
    Matrix input;   // n x d
    Matrix hidden;  // n x h
    Matrix logits;  // n x K
};

// Weights uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out)); biases
// and momentum buffers start at zero.
ModelParams init_params(int feature_dim, int hidden, int num_classes, Rng& rng);

// logits = relu(input * w1 + b1) * w2 + b2.
ForwardCache forward(const ModelParams& params, const Matrix& input);

// Row-wise exp-normalize with max subtraction; rows sum to 1.
Matrix softmax(const Matrix& logits);

Gradients zero_gradients(const ModelParams& params);

// Accumulates exact chain-rule gradients for dLoss/dLogits into `out`
// (accumulation lets several loss branches share one cache-per-branch pass).
void backward(const ModelParams& params, const ForwardCache& cache, const Matrix& grad_logits,
              Gradients& out);

// buffer <- momentum*buffer + grad + weight_decay*param; param -= lr*buffer.
// Weight decay applies to weights only, never biases.
void sgd_step(ModelParams& params, const Gradients& grads, double lr, double momentum,
              double weight_decay);

// Half-cosine schedule: lr0 * 0.5 * (1 + cos(pi * step / total_steps)).
double cosine_lr(std::int64_t step, std::int64_t total_steps, double lr0);

struct Checkpoint {
    ModelParams params;
    std::uint64_t seed = 0;
    std::int64_t step = 0;
};

// Plain-text tensor dump: a shape/seed/step manifest followed by the eight
// tensors (parameters then momentum buffers) in %.17g, so a round-trip is
// bit-exact. Format documented in the README.
void save_checkpoint(const std::string& path, const ModelParams& params, std::uint64_t seed,
                     std::int64_t step);
Checkpoint load_checkpoint(const std::string& path);

} // namespace propssl::nn
