#pragma once

#include <functional>
#include <span>
#include <vector>

#include "oad/kde/kde.hpp"
#include "oad/rng.hpp"

namespace oad::overlap {

// Per-mini-batch anomaly scores: unlabeled side s_n, labeled-anomaly side s_a.
struct ScoreBatch {
  std::vector<double> s_n;
  std::vector<double> s_a;
};

enum class Strategy { random_pick, ensemble };

struct OverlapConfig {
  std::size_t grid_n = 1000;     // intervals of the arithmetic grid
  double bandwidth = 1.0;        // KDE bandwidth h
  Strategy strategy = Strategy::random_pick;
  double extension_width = 3.0;  // grid extension, in multiples of h
};

// Grid x-values where the sign of f_a - f_n flips, plus the selected one.
struct IntersectionResult {
  std::vector<double> candidates;  // ascending
  double chosen_c = 0.0;
  Strategy strategy = Strategy::random_pick;
  bool extended = false;   // true when the +-extension_width*h re-scan was used
  bool fallback = false;   // true when no sign change existed anywhere
  double base_lo = 0.0;    // combined score min (pre-extension)
  double base_hi = 0.0;    // combined score max (pre-extension)
};

// Loss value plus d loss / d score, laid out as s_n grads then s_a grads.
struct LossResult {
  double loss = 0.0;
  std::vector<double> score_grads;
};

// Density-equality point of two Gaussians (sigma = standard deviation).
// Falls back to the midpoint when the deviations are numerically equal.
double gaussian_intersection(double mu_n, double sigma_n, double mu_a,
                             double sigma_a);

// Scans the arithmetic grid over the combined score range for sign changes of
// the KDE density difference. When none are found, the grid is widened by
// extension_width*h on both sides and re-scanned once; if the difference
// never changes sign, the grid point minimizing |f_a - f_n| is used.
IntersectionResult find_intersections(const ScoreBatch& batch,
                                      const OverlapConfig& cfg, Rng& rng);

// Trapezoidal integral of a density over [lo, c], re-gridded into
// n_intervals uniform pieces; clamped to [0, 1]. Requires c >= lo.
using DensityFn =
    std::function<std::vector<double>(std::span<const double>)>;
double trapezoid_cdf(const DensityFn& density, double c, double lo,
                     std::size_t n_intervals);
double trapezoid_cdf(const kde::DensityEstimate& est, double c, double lo,
                     std::size_t n_intervals);

// 1 - F_n(c) + F_a(c) with both CDFs clamped to [0,1]; in [0,2] by
// construction. Ensemble strategy averages over all candidate intersection
// points. Gradients treat c, grid nodes and spacings as constants and flow
// only through the KDE density values.
LossResult overlap_loss(const ScoreBatch& batch, const OverlapConfig& cfg,
                        Rng& rng);
// Same loss on a precomputed intersection plan; keeps the grid and the
// selected c frozen across evaluations (finite-difference checks rely on it).
LossResult overlap_loss_at(const ScoreBatch& batch, const OverlapConfig& cfg,
                           const IntersectionResult& plan);

// Integral of min(f_n, f_a) over the combined range (ties route their
// gradient to the normal-score density).
LossResult overlap_arbitrary(const ScoreBatch& batch, const OverlapConfig& cfg);
LossResult overlap_arbitrary_on(const ScoreBatch& batch,
                                const OverlapConfig& cfg, double lo, double hi);

// Mean over all cross pairs of max(0, s_n_i - s_a_j).
LossResult ranking_term(const ScoreBatch& batch);

// overlap_arbitrary + ranking_term.
LossResult overlap_combined(const ScoreBatch& batch, const OverlapConfig& cfg);
LossResult overlap_combined_on(const ScoreBatch& batch,
                               const OverlapConfig& cfg, double lo, double hi);

// Gaussian-moment variant: fits (mu, sigma) per side, intersects in closed
// form, evaluates 1 - Phi((c-mu_n)/sigma_n) + Phi((c-mu_a)/sigma_a).
// Requires >= 2 samples and nonzero variance per side.
LossResult overlap_gaussian(const ScoreBatch& batch);
LossResult overlap_gaussian_with_c(const ScoreBatch& batch, double c);

// Standard normal CDF.
double normal_cdf(double z);

}  // namespace oad::overlap
