#pragma once

#include <vector>

#include "oad/matrix.hpp"
#include "oad/overlap/overlap.hpp"
#include "oad/rng.hpp"

namespace oad::baselines {

using overlap::LossResult;
using overlap::ScoreBatch;

struct BaselineConfig {
  double bnd = 5.0;  // Minus-loss boundary
  double margin = 5.0;  // Hinge/Deviation margin M
  double mu_nn = 0.0;
  double mu_an = 4.0;
  double mu_aa = 8.0;
  std::size_t deviation_prior_draws = 5000;
  // When true, Deviation z-scores against the batch's own moments instead of
  // a drawn standard-normal reference.
  bool deviation_batch_stats = false;
};

// |s_n| + max(0, BND - |s_a|), mean-reduced per side.
LossResult minus_loss(const ScoreBatch& batch, const BaselineConfig& cfg);

// |s_n| + 1/(|s_a| + eps), eps = 1e-6.
LossResult inverse_loss(const ScoreBatch& batch);

// Mean over cross pairs of max(0, M + s_n - s_a).
LossResult hinge_loss(const ScoreBatch& batch, const BaselineConfig& cfg);

// Z-scores against a freshly drawn standard-normal reference sample, then
// |z_n| + max(0, M - z_a). Reference moments are constants in the gradient.
LossResult deviation_loss(const ScoreBatch& batch, const BaselineConfig& cfg,
                          Rng& rng);

struct PairBatch {
  Matrix features;               // pair count x 2d
  std::vector<double> targets;   // mu_nn / mu_an / mu_aa
};

// Samples pairs_per_type pairs of each of (n,n), (a,n), (a,a) with
// replacement; features concatenated, targets per type.
PairBatch build_pairs(const Matrix& normal_features,
                      const Matrix& anomaly_features,
                      std::size_t pairs_per_type, const BaselineConfig& cfg,
                      Rng& rng);

// Mean absolute deviation of pair scores from their targets.
LossResult ordinal_loss(std::span<const double> pair_scores,
                        std::span<const double> pair_targets);

}  // namespace oad::baselines
