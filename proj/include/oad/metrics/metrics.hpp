#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace oad::metrics {

// Probability that a random positive outranks a random negative, ties
// counted one half (rank-statistic form). Requires both classes present.
double auc_roc(std::span<const double> scores,
               std::span<const std::uint8_t> labels);

// Average precision over descending-score prefixes; ties keep stable input
// order. Requires at least one positive.
double auc_pr(std::span<const double> scores,
              std::span<const std::uint8_t> labels);

struct WilcoxonResult {
  double statistic = 0.0;  // W+, signed ranks of positive differences
  double p_value = 1.0;    // one-sided, alternative "x exceeds y"
  std::size_t n_used = 0;  // pairs after dropping zero differences
  bool exact = false;
};

// Signed-rank test on d = x - y with average ranks for tied |d|. Exact null
// distribution (all sign patterns) for n <= 25; normal approximation with
// tie and continuity corrections beyond. All-zero differences are an error.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x,
                                    std::span<const double> y);

}  // namespace oad::metrics
