#include "oad/nn/scorer.hpp"

#include <cmath>
#include <stdexcept>

#include "oad/rng.hpp"
#include "oad/simd/kernels.hpp"

namespace oad::nn {

ScorerNetwork init_network(std::size_t input_dim, std::size_t hidden_dim,
                           std::uint64_t seed) {
  if (input_dim == 0 || hidden_dim == 0) {
    throw std::invalid_argument("init_network: dimensions must be >= 1");
  }
  ScorerNetwork net;
  net.input_dim = input_dim;
  net.hidden_dim = hidden_dim;
  net.rep_weights.resize(input_dim * hidden_dim);
  net.rep_bias.assign(hidden_dim, 0.0);
  net.score_weights.resize(hidden_dim);
  net.score_bias = 0.0;

  Rng rng(seed);
  const double rep_scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
  for (auto& w : net.rep_weights) w = rng.uniform(-rep_scale, rep_scale);
  const double score_scale = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (auto& w : net.score_weights) w = rng.uniform(-score_scale, score_scale);
  return net;
}

OptimizerState init_optimizer(const ScorerNetwork& net, double learning_rate,
                              double momentum, double weight_decay) {
  OptimizerState opt;
  opt.learning_rate = learning_rate;
  opt.momentum = momentum;
  opt.weight_decay = weight_decay;
  opt.velocity.rep_weights.assign(net.rep_weights.size(), 0.0);
  opt.velocity.rep_bias.assign(net.rep_bias.size(), 0.0);
  opt.velocity.score_weights.assign(net.score_weights.size(), 0.0);
  opt.velocity.score_bias = 0.0;
  return opt;
}

std::vector<double> forward(ScorerNetwork& net, const Matrix& batch, Mode mode,
                            ForwardCache* cache) {
  const std::size_t rows = batch.rows();
  const std::size_t d = net.input_dim;
  const std::size_t h = net.hidden_dim;
  if (batch.cols() != d) {
    throw std::invalid_argument("forward: batch width != input_dim");
  }
  if (mode == Mode::train && rows < 2) {
    throw std::invalid_argument(
        "forward: train mode needs at least 2 rows for batch statistics");
  }

  std::vector<double> pre(rows * h);
  simd::gemm(batch.data(), net.rep_weights.data(), pre.data(), rows, d, h);
  for (std::size_t r = 0; r < rows; ++r) {
    double* prow = pre.data() + r * h;
    for (std::size_t j = 0; j < h; ++j) prow[j] += net.rep_bias[j];
  }

  std::vector<double> hidden(pre);
  for (auto& v : hidden) {
    if (v < 0.0) v = 0.0;
  }

  std::vector<double> raw(rows);
  simd::gemm(hidden.data(), net.score_weights.data(), raw.data(), rows, h, 1);
  for (auto& v : raw) v += net.score_bias;

  std::vector<double> xhat(rows);
  double inv_std = 0.0;
  if (mode == Mode::train) {
    const double n = static_cast<double>(rows);
    const double mean = simd::sum(raw.data(), rows) / n;
    double var = 0.0;
    for (double v : raw) {
      const double dlt = v - mean;
      var += dlt * dlt;
    }
    var /= n;
    inv_std = 1.0 / std::sqrt(var + net.bn.epsilon);
    for (std::size_t i = 0; i < rows; ++i) {
      xhat[i] = (raw[i] - mean) * inv_std;
    }
    // Running variance tracks the unbiased estimate, as is conventional.
    const double m = net.bn.momentum;
    const double var_unbiased = rows > 1 ? var * n / (n - 1.0) : var;
    net.bn.running_mean = (1.0 - m) * net.bn.running_mean + m * mean;
    net.bn.running_var = (1.0 - m) * net.bn.running_var + m * var_unbiased;
  } else {
    inv_std = 1.0 / std::sqrt(net.bn.running_var + net.bn.epsilon);
    for (std::size_t i = 0; i < rows; ++i) {
      xhat[i] = (raw[i] - net.bn.running_mean) * inv_std;
    }
  }
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    out[i] = net.bn.scale * xhat[i] + net.bn.shift;
  }

  if (cache != nullptr) {
    cache->input = batch;
    cache->pre_hidden = std::move(pre);
    cache->hidden = std::move(hidden);
    cache->raw_scores = std::move(raw);
    cache->xhat = std::move(xhat);
    cache->inv_std = inv_std;
    cache->mode = mode;
    cache->rows = rows;
  }
  return out;
}

GradientSet backward(const ScorerNetwork& net, const ForwardCache& cache,
                     std::span<const double> score_grads) {
  const std::size_t rows = cache.rows;
  const std::size_t d = net.input_dim;
  const std::size_t h = net.hidden_dim;
  if (score_grads.size() != rows || cache.input.cols() != d ||
      cache.hidden.size() != rows * h) {
    throw std::invalid_argument("backward: cache does not match network/grads");
  }

  // Through the affine pair and batch normalization.
  GradientSet g;
  g.bn_shift = simd::sum(score_grads.data(), rows);
  g.bn_scale =
      simd::dot(score_grads.data(), cache.xhat.data(), rows);

  std::vector<double> draw(rows);
  const double scale = net.bn.scale;
  if (cache.mode == Mode::train) {
    const double n = static_cast<double>(rows);
    double mean_g = 0.0;
    double mean_gy = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      mean_g += score_grads[i];
      mean_gy += score_grads[i] * cache.xhat[i];
    }
    mean_g /= n;
    mean_gy /= n;
    for (std::size_t i = 0; i < rows; ++i) {
      draw[i] = scale * cache.inv_std *
                (score_grads[i] - mean_g - cache.xhat[i] * mean_gy);
    }
  } else {
    for (std::size_t i = 0; i < rows; ++i) {
      draw[i] = scale * cache.inv_std * score_grads[i];
    }
  }

  g.score_bias = simd::sum(draw.data(), rows);
  g.score_weights.resize(h);
  simd::gemm_at_b(cache.hidden.data(), draw.data(), g.score_weights.data(),
                  rows, h, 1);

  // d hidden = draw (rows x 1) * score_weights^T (1 x h), masked by ReLU.
  std::vector<double> dpre(rows * h);
  for (std::size_t r = 0; r < rows; ++r) {
    const double dr = draw[r];
    const double* prow = cache.pre_hidden.data() + r * h;
    double* drow = dpre.data() + r * h;
    for (std::size_t j = 0; j < h; ++j) {
      drow[j] = prow[j] > 0.0 ? dr * net.score_weights[j] : 0.0;
    }
  }

  g.rep_weights.resize(d * h);
  simd::gemm_at_b(cache.input.data(), dpre.data(), g.rep_weights.data(), rows,
                  d, h);
  g.rep_bias.resize(h);
  simd::col_sum(dpre.data(), rows, h, g.rep_bias.data());
  return g;
}

namespace {

void sgd_update(std::span<double> param, std::span<const double> grad,
                std::span<double> velocity, const OptimizerState& opt) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = opt.momentum * velocity[i] +
                  (grad[i] + opt.weight_decay * param[i]);
    param[i] -= opt.learning_rate * velocity[i];
  }
}

}  // namespace

void sgd_step(ScorerNetwork& net, const GradientSet& grads,
              OptimizerState& opt) {
  if (grads.rep_weights.size() != net.rep_weights.size() ||
      grads.rep_bias.size() != net.rep_bias.size() ||
      grads.score_weights.size() != net.score_weights.size() ||
      opt.velocity.rep_weights.size() != net.rep_weights.size()) {
    throw std::invalid_argument("sgd_step: shape mismatch");
  }
  sgd_update(net.rep_weights, grads.rep_weights, opt.velocity.rep_weights,
             opt);
  sgd_update(net.rep_bias, grads.rep_bias, opt.velocity.rep_bias, opt);
  sgd_update(net.score_weights, grads.score_weights,
             opt.velocity.score_weights, opt);
  const auto scalar_update = [&](double& param, double grad,
                                 double& velocity) {
    std::span<double> p{&param, 1};
    std::span<const double> gr{&grad, 1};
    std::span<double> v{&velocity, 1};
    sgd_update(p, gr, v, opt);
  };
  scalar_update(net.score_bias, grads.score_bias, opt.velocity.score_bias);
  scalar_update(net.bn.scale, grads.bn_scale, opt.velocity.bn_scale);
  scalar_update(net.bn.shift, grads.bn_shift, opt.velocity.bn_shift);
}

double param_change_norm(const ScorerNetwork& net, const ScorerNetwork& net0) {
  if (net.rep_weights.size() != net0.rep_weights.size() ||
      net.rep_bias.size() != net0.rep_bias.size() ||
      net.score_weights.size() != net0.score_weights.size()) {
    throw std::invalid_argument("param_change_norm: shape mismatch");
  }
  double acc = simd::sq_diff_sum(net.rep_weights.data(),
                                 net0.rep_weights.data(),
                                 net.rep_weights.size());
  acc += simd::sq_diff_sum(net.rep_bias.data(), net0.rep_bias.data(),
                           net.rep_bias.size());
  acc += simd::sq_diff_sum(net.score_weights.data(),
                           net0.score_weights.data(),
                           net.score_weights.size());
  const double db = net.score_bias - net0.score_bias;
  const double ds = net.bn.scale - net0.bn.scale;
  const double dh = net.bn.shift - net0.bn.shift;
  return acc + db * db + ds * ds + dh * dh;
}

}  // namespace oad::nn
