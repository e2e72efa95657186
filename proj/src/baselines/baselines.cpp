#include "oad/baselines/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace oad::baselines {

namespace {

constexpr double kInverseEps = 1e-6;

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

void require_both_sides(const ScoreBatch& batch, const char* op) {
  if (batch.s_n.empty() || batch.s_a.empty()) {
    throw std::invalid_argument(std::string(op) + ": empty score side");
  }
}

}  // namespace

LossResult minus_loss(const ScoreBatch& batch, const BaselineConfig& cfg) {
  require_both_sides(batch, "minus_loss");
  const std::size_t nn = batch.s_n.size();
  const std::size_t na = batch.s_a.size();
  LossResult out;
  out.score_grads.assign(nn + na, 0.0);
  for (std::size_t i = 0; i < nn; ++i) {
    out.loss += std::abs(batch.s_n[i]) / static_cast<double>(nn);
    out.score_grads[i] = sgn(batch.s_n[i]) / static_cast<double>(nn);
  }
  for (std::size_t j = 0; j < na; ++j) {
    const double slack = cfg.bnd - std::abs(batch.s_a[j]);
    if (slack > 0.0) {
      out.loss += slack / static_cast<double>(na);
      out.score_grads[nn + j] = -sgn(batch.s_a[j]) / static_cast<double>(na);
    }
  }
  return out;
}

LossResult inverse_loss(const ScoreBatch& batch) {
  require_both_sides(batch, "inverse_loss");
  const std::size_t nn = batch.s_n.size();
  const std::size_t na = batch.s_a.size();
  LossResult out;
  out.score_grads.assign(nn + na, 0.0);
  for (std::size_t i = 0; i < nn; ++i) {
    out.loss += std::abs(batch.s_n[i]) / static_cast<double>(nn);
    out.score_grads[i] = sgn(batch.s_n[i]) / static_cast<double>(nn);
  }
  for (std::size_t j = 0; j < na; ++j) {
    const double mag = std::abs(batch.s_a[j]) + kInverseEps;
    out.loss += 1.0 / (mag * static_cast<double>(na));
    out.score_grads[nn + j] =
        -sgn(batch.s_a[j]) / (mag * mag * static_cast<double>(na));
  }
  return out;
}

LossResult hinge_loss(const ScoreBatch& batch, const BaselineConfig& cfg) {
  require_both_sides(batch, "hinge_loss");
  const std::size_t nn = batch.s_n.size();
  const std::size_t na = batch.s_a.size();
  LossResult out;
  out.score_grads.assign(nn + na, 0.0);
  const double inv = 1.0 / (static_cast<double>(nn) * static_cast<double>(na));
  for (std::size_t i = 0; i < nn; ++i) {
    for (std::size_t j = 0; j < na; ++j) {
      const double v = cfg.margin + batch.s_n[i] - batch.s_a[j];
      if (v > 0.0) {
        out.loss += v * inv;
        out.score_grads[i] += inv;
        out.score_grads[nn + j] -= inv;
      }
    }
  }
  return out;
}

LossResult deviation_loss(const ScoreBatch& batch, const BaselineConfig& cfg,
                          Rng& rng) {
  require_both_sides(batch, "deviation_loss");
  const std::size_t nn = batch.s_n.size();
  const std::size_t na = batch.s_a.size();

  double mu_ref = 0.0;
  double sd_ref = 1.0;
  if (cfg.deviation_batch_stats) {
    double m = 0.0;
    for (double v : batch.s_n) m += v;
    for (double v : batch.s_a) m += v;
    m /= static_cast<double>(nn + na);
    double var = 0.0;
    for (double v : batch.s_n) var += (v - m) * (v - m);
    for (double v : batch.s_a) var += (v - m) * (v - m);
    var /= static_cast<double>(nn + na);
    mu_ref = m;
    sd_ref = std::sqrt(var + 1e-12);
  } else {
    const std::size_t draws = cfg.deviation_prior_draws;
    double m = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
      const double v = rng.normal();
      m += v;
      m2 += v * v;
    }
    m /= static_cast<double>(draws);
    const double var =
        (m2 - static_cast<double>(draws) * m * m) /
        static_cast<double>(draws - 1);
    mu_ref = m;
    sd_ref = std::sqrt(var);
  }

  LossResult out;
  out.score_grads.assign(nn + na, 0.0);
  for (std::size_t i = 0; i < nn; ++i) {
    const double z = (batch.s_n[i] - mu_ref) / sd_ref;
    out.loss += std::abs(z) / static_cast<double>(nn);
    out.score_grads[i] = sgn(z) / (sd_ref * static_cast<double>(nn));
  }
  for (std::size_t j = 0; j < na; ++j) {
    const double z = (batch.s_a[j] - mu_ref) / sd_ref;
    const double slack = cfg.margin - z;
    if (slack > 0.0) {
      out.loss += slack / static_cast<double>(na);
      out.score_grads[nn + j] = -1.0 / (sd_ref * static_cast<double>(na));
    }
  }
  return out;
}

PairBatch build_pairs(const Matrix& normal_features,
                      const Matrix& anomaly_features,
                      std::size_t pairs_per_type, const BaselineConfig& cfg,
                      Rng& rng) {
  if (normal_features.rows() == 0 || anomaly_features.rows() == 0) {
    throw std::invalid_argument("build_pairs: a class is empty");
  }
  if (normal_features.cols() != anomaly_features.cols()) {
    throw std::invalid_argument("build_pairs: feature width mismatch");
  }
  const std::size_t d = normal_features.cols();
  PairBatch out;
  out.features = Matrix(3 * pairs_per_type, 2 * d);
  out.targets.reserve(3 * pairs_per_type);

  const auto emit = [&](std::size_t row, const Matrix& first, std::size_t i,
                        const Matrix& second, std::size_t j) {
    double* dst = out.features.data() + row * 2 * d;
    const double* a = first.data() + i * d;
    const double* b = second.data() + j * d;
    for (std::size_t k = 0; k < d; ++k) dst[k] = a[k];
    for (std::size_t k = 0; k < d; ++k) dst[d + k] = b[k];
  };

  std::size_t row = 0;
  for (std::size_t p = 0; p < pairs_per_type; ++p, ++row) {
    emit(row, normal_features, rng.uniform_below(normal_features.rows()),
         normal_features, rng.uniform_below(normal_features.rows()));
    out.targets.push_back(cfg.mu_nn);
  }
  for (std::size_t p = 0; p < pairs_per_type; ++p, ++row) {
    emit(row, anomaly_features, rng.uniform_below(anomaly_features.rows()),
         normal_features, rng.uniform_below(normal_features.rows()));
    out.targets.push_back(cfg.mu_an);
  }
  for (std::size_t p = 0; p < pairs_per_type; ++p, ++row) {
    emit(row, anomaly_features, rng.uniform_below(anomaly_features.rows()),
         anomaly_features, rng.uniform_below(anomaly_features.rows()));
    out.targets.push_back(cfg.mu_aa);
  }
  return out;
}

LossResult ordinal_loss(std::span<const double> pair_scores,
                        std::span<const double> pair_targets) {
  if (pair_scores.size() != pair_targets.size()) {
    throw std::invalid_argument("ordinal_loss: length mismatch");
  }
  if (pair_scores.empty()) {
    throw std::invalid_argument("ordinal_loss: no pairs");
  }
  const double inv = 1.0 / static_cast<double>(pair_scores.size());
  LossResult out;
  out.score_grads.assign(pair_scores.size(), 0.0);
  for (std::size_t i = 0; i < pair_scores.size(); ++i) {
    const double d = pair_scores[i] - pair_targets[i];
    out.loss += std::abs(d) * inv;
    out.score_grads[i] = sgn(d) * inv;
  }
  return out;
}

}  // namespace oad::baselines
