#include "oad/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace oad::metrics {

double auc_roc(std::span<const double> scores,
               std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("auc_roc: length mismatch");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (auto l : labels) n_pos += l;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("auc_roc: both classes required");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Average ranks over tied scores, then the Mann-Whitney identity.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t k = i;
    while (k + 1 < n && scores[order[k + 1]] == scores[order[i]]) ++k;
    const double avg_rank = 0.5 * static_cast<double>(i + k) + 1.0;
    for (std::size_t t = i; t <= k; ++t) {
      if (labels[order[t]] == 1) pos_rank_sum += avg_rank;
    }
    i = k + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double auc_pr(std::span<const double> scores,
              std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("auc_pr: length mismatch");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (auto l : labels) n_pos += l;
  if (n_pos == 0) {
    throw std::invalid_argument("auc_pr: needs at least one positive");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });

  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[order[k]] == 1) {
      ++hits;
      const double precision =
          static_cast<double>(hits) / static_cast<double>(k + 1);
      ap += precision / static_cast<double>(n_pos);
    }
  }
  return ap;
}

namespace {

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x,
                                    std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("wilcoxon: length mismatch");
  }
  std::vector<double> abs_d;
  std::vector<int> sign_d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d == 0.0) continue;
    abs_d.push_back(std::abs(d));
    sign_d.push_back(d > 0.0 ? 1 : -1);
  }
  const std::size_t n = abs_d.size();
  if (n == 0) {
    throw std::invalid_argument("wilcoxon: all differences are zero");
  }

  // Average ranks of |d| (ties share their mean rank).
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return abs_d[a] < abs_d[b];
  });
  std::vector<double> rank(n);
  std::vector<double> tie_sizes;
  std::size_t i = 0;
  while (i < n) {
    std::size_t k = i;
    while (k + 1 < n && abs_d[order[k + 1]] == abs_d[order[i]]) ++k;
    const double avg = 0.5 * static_cast<double>(i + k) + 1.0;
    for (std::size_t t = i; t <= k; ++t) rank[order[t]] = avg;
    tie_sizes.push_back(static_cast<double>(k - i + 1));
    i = k + 1;
  }

  double w_plus = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (sign_d[t] > 0) w_plus += rank[t];
  }

  WilcoxonResult res;
  res.statistic = w_plus;
  res.n_used = n;

  if (n <= 25) {
    // Exact null distribution via the generating function over sign flips.
    // Ranks are multiples of 1/2 (average ranks), so work on doubled values.
    std::vector<long long> r2(n);
    long long total = 0;
    for (std::size_t t = 0; t < n; ++t) {
      r2[t] = std::llround(2.0 * rank[t]);
      total += r2[t];
    }
    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1.0;
    long long reach = 0;
    for (std::size_t t = 0; t < n; ++t) {
      reach += r2[t];
      for (long long w = reach; w >= r2[t]; --w) {
        ways[static_cast<std::size_t>(w)] +=
            ways[static_cast<std::size_t>(w - r2[t])];
      }
    }
    const long long obs = std::llround(2.0 * w_plus);
    double tail = 0.0;
    for (long long w = obs; w <= total; ++w) {
      tail += ways[static_cast<std::size_t>(w)];
    }
    res.p_value = tail / std::pow(2.0, static_cast<double>(n));
    res.exact = true;
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double tie_corr = 0.0;
    for (double t : tie_sizes) tie_corr += t * t * t - t;
    const double var =
        nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_corr / 48.0;
    const double z = (w_plus - mean - 0.5) / std::sqrt(var);
    res.p_value = normal_sf(z);
    res.exact = false;
  }
  return res;
}

}  // namespace oad::metrics
