#pragma once

#include <span>
#include <vector>

namespace oad::kde {

// One-dimensional Gaussian-kernel density over a batch of anomaly scores.
struct DensityEstimate {
  std::vector<double> samples;
  double bandwidth = 1.0;

  DensityEstimate(std::vector<double> s, double h);
};

// f(p) = 1/(n*h) * sum_i phi((p - s_i)/h), phi the standard normal pdf.
std::vector<double> pdf_at(const DensityEstimate& est,
                           std::span<const double> points);

// d/d s_i of sum_k upstream[k] * f(points[k]); evaluation points are
// constants. Exact analytic derivative of the kernel mixture.
std::vector<double> pdf_grad_wrt_samples(const DensityEstimate& est,
                                         std::span<const double> points,
                                         std::span<const double> upstream);

// Arithmetic grid of n_intervals+1 points from lo to hi inclusive.
struct ScoreGrid {
  std::vector<double> points;
  double spacing = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Grid over the combined score range [min, max]. Throws
// degenerate_batch_error when all scores coincide.
ScoreGrid make_grid(std::span<const double> s_n, std::span<const double> s_a,
                    std::size_t n_intervals);

ScoreGrid make_grid_range(double lo, double hi, std::size_t n_intervals);

}  // namespace oad::kde
