#include "oad/overlap/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oad/error.hpp"

namespace oad::overlap {

namespace {

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

kde::DensityEstimate side_estimate(const std::vector<double>& scores,
                                   double h) {
  return kde::DensityEstimate(scores, h);
}

// Trapezoid weights over n+1 nodes with spacing delta.
std::vector<double> trapezoid_weights(std::size_t n_nodes, double delta) {
  std::vector<double> w(n_nodes, delta);
  w.front() = 0.5 * delta;
  w.back() = 0.5 * delta;
  return w;
}

struct CdfEval {
  double raw = 0.0;
  double clamped = 0.0;
  bool grad_active = false;
  std::vector<double> grad;  // d clamped / d samples, zero when clamp engaged
};

CdfEval cdf_eval(const kde::DensityEstimate& est, double c, double lo,
                 std::size_t n_intervals, bool want_grad) {
  if (c < lo) {
    throw std::invalid_argument("trapezoid_cdf: c below the lower limit");
  }
  CdfEval ev;
  if (want_grad) ev.grad.assign(est.samples.size(), 0.0);
  if (c == lo) return ev;

  const double delta = (c - lo) / static_cast<double>(n_intervals);
  std::vector<double> nodes(n_intervals + 1);
  for (std::size_t k = 0; k <= n_intervals; ++k) {
    nodes[k] = lo + static_cast<double>(k) * delta;
  }
  nodes.back() = c;

  const std::vector<double> dens = kde::pdf_at(est, nodes);
  const std::vector<double> w = trapezoid_weights(nodes.size(), delta);
  double raw = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) raw += w[k] * dens[k];
  ev.raw = raw;
  ev.clamped = std::clamp(raw, 0.0, 1.0);
  ev.grad_active = raw > 0.0 && raw < 1.0;
  if (want_grad && ev.grad_active) {
    ev.grad = kde::pdf_grad_wrt_samples(est, nodes, w);
  }
  return ev;
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double gaussian_intersection(double mu_n, double sigma_n, double mu_a,
                             double sigma_a) {
  if (!(sigma_n > 0.0) || !(sigma_a > 0.0)) {
    throw std::invalid_argument(
        "gaussian_intersection: deviations must be positive");
  }
  if (std::abs(sigma_n - sigma_a) < 1e-12) {
    return 0.5 * (mu_n + mu_a);
  }
  const double vn = sigma_n * sigma_n;
  const double va = sigma_a * sigma_a;
  // Discriminant is >= 0 algebraically; roundoff can push it negative.
  const double disc = (mu_n - mu_a) * (mu_n - mu_a) +
                      2.0 * (vn - va) * std::log(sigma_n / sigma_a);
  const double root = std::sqrt(std::max(disc, 0.0));
  return (mu_a * vn - sigma_a * (mu_n * sigma_a + sigma_n * root)) / (vn - va);
}

IntersectionResult find_intersections(const ScoreBatch& batch,
                                      const OverlapConfig& cfg, Rng& rng) {
  if (batch.s_n.empty() || batch.s_a.empty()) {
    throw std::invalid_argument("find_intersections: empty score side");
  }
  const kde::DensityEstimate est_n = side_estimate(batch.s_n, cfg.bandwidth);
  const kde::DensityEstimate est_a = side_estimate(batch.s_a, cfg.bandwidth);

  IntersectionResult res;
  res.strategy = cfg.strategy;

  const kde::ScoreGrid base =
      kde::make_grid(batch.s_n, batch.s_a, cfg.grid_n);
  res.base_lo = base.lo;
  res.base_hi = base.hi;

  // One candidate per sign change of f_a - f_n. A difference that touches
  // exactly zero on a grid node is a single crossing anchored at the
  // equality point, not two adjacent ones.
  const auto scan = [&](const kde::ScoreGrid& grid) {
    std::vector<double> cands;
    const std::vector<double> fn = kde::pdf_at(est_n, grid.points);
    const std::vector<double> fa = kde::pdf_at(est_a, grid.points);
    int prev_sign = 0;
    std::size_t zero_start = 0;
    bool in_zero_run = false;
    for (std::size_t k = 0; k < grid.points.size(); ++k) {
      const int s = sgn(fa[k] - fn[k]);
      if (s == 0) {
        if (!in_zero_run) {
          in_zero_run = true;
          zero_start = k;
        }
        continue;
      }
      if (prev_sign != 0 && s != prev_sign) {
        cands.push_back(grid.points[in_zero_run ? zero_start : k]);
      }
      prev_sign = s;
      in_zero_run = false;
    }
    return cands;
  };

  res.candidates = scan(base);
  if (res.candidates.empty()) {
    // Far-apart or sign-constant densities: widen the range once and retry.
    const double ext = cfg.extension_width * cfg.bandwidth;
    const kde::ScoreGrid wide =
        kde::make_grid_range(base.lo - ext, base.hi + ext, cfg.grid_n);
    res.extended = true;
    res.candidates = scan(wide);
    if (res.candidates.empty()) {
      // No sign change anywhere (e.g. identical sides): closest approach.
      const std::vector<double> fn = kde::pdf_at(est_n, wide.points);
      const std::vector<double> fa = kde::pdf_at(est_a, wide.points);
      std::size_t best = 0;
      double best_gap = std::abs(fa[0] - fn[0]);
      for (std::size_t k = 1; k < wide.points.size(); ++k) {
        const double gap = std::abs(fa[k] - fn[k]);
        if (gap < best_gap) {
          best_gap = gap;
          best = k;
        }
      }
      res.candidates.push_back(wide.points[best]);
      res.fallback = true;
    }
  }

  if (cfg.strategy == Strategy::random_pick) {
    res.chosen_c = res.candidates[static_cast<std::size_t>(
        rng.uniform_below(res.candidates.size()))];
  } else {
    res.chosen_c = res.candidates.front();
  }
  return res;
}

double trapezoid_cdf(const DensityFn& density, double c, double lo,
                     std::size_t n_intervals) {
  if (c < lo) {
    throw std::invalid_argument("trapezoid_cdf: c below the lower limit");
  }
  if (c == lo) return 0.0;
  const double delta = (c - lo) / static_cast<double>(n_intervals);
  std::vector<double> nodes(n_intervals + 1);
  for (std::size_t k = 0; k <= n_intervals; ++k) {
    nodes[k] = lo + static_cast<double>(k) * delta;
  }
  nodes.back() = c;
  const std::vector<double> dens = density(nodes);
  const std::vector<double> w = trapezoid_weights(nodes.size(), delta);
  double raw = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) raw += w[k] * dens[k];
  return std::clamp(raw, 0.0, 1.0);
}

double trapezoid_cdf(const kde::DensityEstimate& est, double c, double lo,
                     std::size_t n_intervals) {
  return cdf_eval(est, c, lo, n_intervals, false).clamped;
}

LossResult overlap_loss_at(const ScoreBatch& batch, const OverlapConfig& cfg,
                           const IntersectionResult& plan) {
  const std::size_t nn = batch.s_n.size();
  const std::size_t na = batch.s_a.size();
  const kde::DensityEstimate est_n = side_estimate(batch.s_n, cfg.bandwidth);
  const kde::DensityEstimate est_a = side_estimate(batch.s_a, cfg.bandwidth);

  // The CDF integration starts extension_width*h below the combined minimum:
  // Eq-style truncation at the minimum sample would drop the kernel mass
  // below it, which keeps P(s_a < c) visibly short of 1 on reversed batches.
  const double cdf_lo =
      plan.base_lo - cfg.extension_width * cfg.bandwidth;

  std::vector<double> cands;
  if (cfg.strategy == Strategy::ensemble) {
    cands = plan.candidates;
    if (cands.empty()) {
      throw std::invalid_argument("overlap_loss: plan has no candidates");
    }
  } else {
    cands.push_back(plan.chosen_c);
  }

  LossResult out;
  out.score_grads.assign(nn + na, 0.0);
  for (double c : cands) {
    const double ce = std::max(c, cdf_lo);
    const CdfEval en = cdf_eval(est_n, ce, cdf_lo, cfg.grid_n, true);
    const CdfEval ea = cdf_eval(est_a, ce, cdf_lo, cfg.grid_n, true);
    out.loss += 1.0 - en.clamped + ea.clamped;
    if (en.grad_active) {
      for (std::size_t i = 0; i < nn; ++i) out.score_grads[i] -= en.grad[i];
    }
    if (ea.grad_active) {
      for (std::size_t j = 0; j < na; ++j) {
        out.score_grads[nn + j] += ea.grad[j];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(cands.size());
  out.loss *= inv;
  for (auto& g : out.score_grads) g *= inv;
  return out;
}

LossResult overlap_loss(const ScoreBatch& batch, const OverlapConfig& cfg,
                        Rng& rng) {
  const IntersectionResult plan = find_intersections(batch, cfg, rng);
  return overlap_loss_at(batch, cfg, plan);
}

LossResult overlap_arbitrary_on(const ScoreBatch& batch,
                                const OverlapConfig& cfg, double lo,
                                double hi) {
  const std::size_t nn = batch.s_n.size();
  const std::size_t na = batch.s_a.size();
  if (nn == 0 || na == 0) {
    throw std::invalid_argument("overlap_arbitrary: empty score side");
  }
  const kde::DensityEstimate est_n = side_estimate(batch.s_n, cfg.bandwidth);
  const kde::DensityEstimate est_a = side_estimate(batch.s_a, cfg.bandwidth);
  const kde::ScoreGrid grid = kde::make_grid_range(lo, hi, cfg.grid_n);

  const std::vector<double> fn = kde::pdf_at(est_n, grid.points);
  const std::vector<double> fa = kde::pdf_at(est_a, grid.points);
  const std::vector<double> w =
      trapezoid_weights(grid.points.size(), grid.spacing);

  LossResult out;
  std::vector<double> up_n(grid.points.size(), 0.0);
  std::vector<double> up_a(grid.points.size(), 0.0);
  for (std::size_t k = 0; k < grid.points.size(); ++k) {
    if (fn[k] <= fa[k]) {
      out.loss += w[k] * fn[k];
      up_n[k] = w[k];
    } else {
      out.loss += w[k] * fa[k];
      up_a[k] = w[k];
    }
  }
  out.score_grads.assign(nn + na, 0.0);
  const std::vector<double> gn =
      kde::pdf_grad_wrt_samples(est_n, grid.points, up_n);
  const std::vector<double> ga =
      kde::pdf_grad_wrt_samples(est_a, grid.points, up_a);
  for (std::size_t i = 0; i < nn; ++i) out.score_grads[i] = gn[i];
  for (std::size_t j = 0; j < na; ++j) out.score_grads[nn + j] = ga[j];
  return out;
}

LossResult overlap_arbitrary(const ScoreBatch& batch,
                             const OverlapConfig& cfg) {
  const kde::ScoreGrid grid =
      kde::make_grid(batch.s_n, batch.s_a, cfg.grid_n);
  return overlap_arbitrary_on(batch, cfg, grid.lo, grid.hi);
}

LossResult ranking_term(const ScoreBatch& batch) {
  const std::size_t nn = batch.s_n.size();
  const std::size_t na = batch.s_a.size();
  if (nn == 0 || na == 0) {
    throw std::invalid_argument("ranking_term: empty score side");
  }
  LossResult out;
  out.score_grads.assign(nn + na, 0.0);
  const double inv = 1.0 / (static_cast<double>(nn) * static_cast<double>(na));
  for (std::size_t i = 0; i < nn; ++i) {
    for (std::size_t j = 0; j < na; ++j) {
      const double diff = batch.s_n[i] - batch.s_a[j];
      if (diff > 0.0) {
        out.loss += diff * inv;
        out.score_grads[i] += inv;
        out.score_grads[nn + j] -= inv;
      }
    }
  }
  return out;
}

LossResult overlap_combined_on(const ScoreBatch& batch,
                               const OverlapConfig& cfg, double lo,
                               double hi) {
  LossResult area = overlap_arbitrary_on(batch, cfg, lo, hi);
  const LossResult rank = ranking_term(batch);
  area.loss += rank.loss;
  for (std::size_t i = 0; i < area.score_grads.size(); ++i) {
    area.score_grads[i] += rank.score_grads[i];
  }
  return area;
}

LossResult overlap_combined(const ScoreBatch& batch,
                            const OverlapConfig& cfg) {
  const kde::ScoreGrid grid =
      kde::make_grid(batch.s_n, batch.s_a, cfg.grid_n);
  return overlap_combined_on(batch, cfg, grid.lo, grid.hi);
}

namespace {

struct Moments {
  double mean = 0.0;
  double sigma = 0.0;  // sqrt of the biased sample variance
};

Moments side_moments(const std::vector<double>& s, const char* side) {
  if (s.size() < 2) {
    throw std::invalid_argument(std::string("overlap_gaussian: side ") + side +
                                " needs at least 2 samples");
  }
  Moments m;
  for (double v : s) m.mean += v;
  m.mean /= static_cast<double>(s.size());
  double var = 0.0;
  for (double v : s) {
    const double d = v - m.mean;
    var += d * d;
  }
  var /= static_cast<double>(s.size());
  if (!(var > 0.0)) {
    throw degenerate_batch_error("overlap_gaussian: zero sample variance");
  }
  m.sigma = std::sqrt(var);
  return m;
}

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) * 0.3989422804014326779399;
}

}  // namespace

LossResult overlap_gaussian_with_c(const ScoreBatch& batch, double c) {
  const Moments mn = side_moments(batch.s_n, "s_n");
  const Moments ma = side_moments(batch.s_a, "s_a");
  const std::size_t nn = batch.s_n.size();
  const std::size_t na = batch.s_a.size();

  const double zn = (c - mn.mean) / mn.sigma;
  const double za = (c - ma.mean) / ma.sigma;

  LossResult out;
  out.loss = 1.0 - normal_cdf(zn) + normal_cdf(za);
  out.score_grads.assign(nn + na, 0.0);

  // d loss / d mu_n = phi(zn)/sigma_n ; d loss / d sigma_n = phi(zn)*zn/sigma_n
  // d loss / d mu_a = -phi(za)/sigma_a ; d loss / d sigma_a = -phi(za)*za/sigma_a
  const double dmu_n = normal_pdf(zn) / mn.sigma;
  const double dsig_n = normal_pdf(zn) * zn / mn.sigma;
  const double dmu_a = -normal_pdf(za) / ma.sigma;
  const double dsig_a = -normal_pdf(za) * za / ma.sigma;

  for (std::size_t i = 0; i < nn; ++i) {
    const double dmean = 1.0 / static_cast<double>(nn);
    const double dsigma =
        (batch.s_n[i] - mn.mean) / (static_cast<double>(nn) * mn.sigma);
    out.score_grads[i] = dmu_n * dmean + dsig_n * dsigma;
  }
  for (std::size_t j = 0; j < na; ++j) {
    const double dmean = 1.0 / static_cast<double>(na);
    const double dsigma =
        (batch.s_a[j] - ma.mean) / (static_cast<double>(na) * ma.sigma);
    out.score_grads[nn + j] = dmu_a * dmean + dsig_a * dsigma;
  }
  return out;
}

LossResult overlap_gaussian(const ScoreBatch& batch) {
  const Moments mn = side_moments(batch.s_n, "s_n");
  const Moments ma = side_moments(batch.s_a, "s_a");
  const double c =
      gaussian_intersection(mn.mean, mn.sigma, ma.mean, ma.sigma);
  return overlap_gaussian_with_c(batch, c);
}

}  // namespace oad::overlap
