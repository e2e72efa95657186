#include "oad/kde/kde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oad/error.hpp"
#include "oad/simd/kernels.hpp"

namespace oad::kde {

DensityEstimate::DensityEstimate(std::vector<double> s, double h)
    : samples(std::move(s)), bandwidth(h) {
  if (samples.empty()) {
    throw std::invalid_argument("DensityEstimate: no samples");
  }
  if (!(bandwidth > 0.0)) {
    throw std::invalid_argument("DensityEstimate: bandwidth must be > 0");
  }
  for (double v : samples) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("DensityEstimate: non-finite sample");
    }
  }
}

std::vector<double> pdf_at(const DensityEstimate& est,
                           std::span<const double> points) {
  std::vector<double> out(points.size());
  simd::kde_density(est.samples.data(), est.samples.size(), est.bandwidth,
                    points.data(), points.size(), out.data());
  return out;
}

std::vector<double> pdf_grad_wrt_samples(const DensityEstimate& est,
                                         std::span<const double> points,
                                         std::span<const double> upstream) {
  if (points.size() != upstream.size()) {
    throw std::invalid_argument("pdf_grad_wrt_samples: length mismatch");
  }
  std::vector<double> grad(est.samples.size());
  simd::kde_density_grad(est.samples.data(), est.samples.size(), est.bandwidth,
                         points.data(), upstream.data(), points.size(),
                         grad.data());
  return grad;
}

ScoreGrid make_grid_range(double lo, double hi, std::size_t n_intervals) {
  if (n_intervals < 2) {
    throw std::invalid_argument("make_grid: need at least 2 intervals");
  }
  if (!(hi > lo)) {
    throw degenerate_batch_error("make_grid: zero-width score range");
  }
  ScoreGrid grid;
  grid.lo = lo;
  grid.hi = hi;
  grid.spacing = (hi - lo) / static_cast<double>(n_intervals);
  grid.points.resize(n_intervals + 1);
  for (std::size_t k = 0; k <= n_intervals; ++k) {
    grid.points[k] = lo + static_cast<double>(k) * grid.spacing;
  }
  grid.points.back() = hi;  // exact endpoint
  return grid;
}

ScoreGrid make_grid(std::span<const double> s_n, std::span<const double> s_a,
                    std::size_t n_intervals) {
  if (s_n.empty() && s_a.empty()) {
    throw std::invalid_argument("make_grid: empty score batch");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : s_n) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : s_a) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return make_grid_range(lo, hi, n_intervals);
}

}  // namespace oad::kde
