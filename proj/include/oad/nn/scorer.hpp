#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oad/matrix.hpp"

namespace oad::nn {

enum class Mode { train, eval };

struct BatchNormState {
  double running_mean = 0.0;
  double running_var = 1.0;
  double scale = 1.0;  // learnable affine pair; margin-style losses need the
  double shift = 0.0;  // score range to be trainable
  double momentum = 0.1;
  double epsilon = 1e-5;
};

// Two-layer scorer: ReLU representation layer followed by a scalar scoring
// head whose output is batch-normalized (non-affine, single channel).
struct ScorerNetwork {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::vector<double> rep_weights;    // input_dim x hidden_dim, row-major
  std::vector<double> rep_bias;       // hidden_dim
  std::vector<double> score_weights;  // hidden_dim
  double score_bias = 0.0;
  BatchNormState bn;
};

// Shape-congruent with the network's parameter arrays.
struct GradientSet {
  std::vector<double> rep_weights;
  std::vector<double> rep_bias;
  std::vector<double> score_weights;
  double score_bias = 0.0;
  double bn_scale = 0.0;
  double bn_shift = 0.0;
};

struct OptimizerState {
  double learning_rate = 0.001;
  double momentum = 0.7;
  double weight_decay = 0.01;
  GradientSet velocity;
};

// Everything backward needs from a forward pass.
struct ForwardCache {
  Matrix input;
  std::vector<double> pre_hidden;  // rows x hidden, pre-activation
  std::vector<double> hidden;      // rows x hidden, post-ReLU
  std::vector<double> raw_scores;  // rows, pre-normalization
  std::vector<double> xhat;        // rows, normalized pre-affine
  double inv_std = 0.0;            // 1/sqrt(var + eps) used for normalization
  Mode mode = Mode::train;
  std::size_t rows = 0;
};

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero,
// running statistics (0, 1). Bitwise deterministic for a given seed.
ScorerNetwork init_network(std::size_t input_dim, std::size_t hidden_dim,
                           std::uint64_t seed);

OptimizerState init_optimizer(const ScorerNetwork& net, double learning_rate,
                              double momentum, double weight_decay);

// Train mode normalizes with batch statistics and updates the running ones
// (so it mutates `net`); eval mode uses running statistics only. Train mode
// requires at least two rows.
std::vector<double> forward(ScorerNetwork& net, const Matrix& batch, Mode mode,
                            ForwardCache* cache = nullptr);

GradientSet backward(const ScorerNetwork& net, const ForwardCache& cache,
                     std::span<const double> score_grads);

// velocity <- momentum*velocity + (grad + weight_decay*param);
// param <- param - lr*velocity
void sgd_step(ScorerNetwork& net, const GradientSet& grads,
              OptimizerState& opt);

// Sum over parameter arrays of the squared Euclidean distance.
double param_change_norm(const ScorerNetwork& net, const ScorerNetwork& net0);

}  // namespace oad::nn
