#include "oad/synth/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "oad/error.hpp"

namespace oad::synth {

namespace {

constexpr double kRidge = 1e-6;
constexpr std::size_t kMaxIters = 200;
constexpr double kRelTol = 1e-8;

struct CompDensity {
  Matrix chol;
  double log_norm = 0.0;  // -(d/2)log(2pi) - (1/2)logdet
};

CompDensity prepare(const GaussianComponent& c) {
  CompDensity cd;
  cd.chol = cholesky(c.covariance);
  double logdet = 0.0;
  for (std::size_t i = 0; i < cd.chol.rows(); ++i) {
    logdet += 2.0 * std::log(cd.chol(i, i));
  }
  const double d = static_cast<double>(c.mean.size());
  cd.log_norm = -0.5 * (d * std::log(2.0 * std::numbers::pi) + logdet);
  return cd;
}

// Squared Mahalanobis distance via forward substitution on the factor.
double maha2(const CompDensity& cd, const GaussianComponent& c,
             std::span<const double> x, std::vector<double>& work) {
  const std::size_t d = c.mean.size();
  for (std::size_t i = 0; i < d; ++i) {
    double v = x[i] - c.mean[i];
    for (std::size_t j = 0; j < i; ++j) v -= cd.chol(i, j) * work[j];
    work[i] = v / cd.chol(i, i);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) acc += work[i] * work[i];
  return acc;
}

double logsumexp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

struct EmFit {
  std::vector<GaussianComponent> components;
  double loglik = 0.0;
  std::vector<double> history;
};

std::vector<std::size_t> kmeanspp_centers(const Matrix& x, std::size_t k,
                                          Rng& rng) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  std::vector<std::size_t> centers;
  centers.push_back(rng.uniform_below(n));
  std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    const std::size_t last = centers.back();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double del = x(i, j) - x(last, j);
        acc += del * del;
      }
      dist2[i] = std::min(dist2[i], acc);
      total += dist2[i];
    }
    if (total <= 0.0) {
      centers.push_back(rng.uniform_below(n));
      continue;
    }
    double u = rng.uniform() * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      u -= dist2[i];
      if (u <= 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(pick);
  }
  return centers;
}

Matrix global_covariance(const Matrix& x, std::span<const double> mean) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Matrix cov(d, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      const double di = x(r, i) - mean[i];
      for (std::size_t j = 0; j <= i; ++j) {
        cov(i, j) += di * (x(r, j) - mean[j]);
      }
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      cov(i, j) /= static_cast<double>(n);
      cov(j, i) = cov(i, j);
    }
    cov(i, i) += kRidge;
  }
  return cov;
}

EmFit run_em(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();

  std::vector<double> gmean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) gmean[j] += x(r, j);
  }
  for (auto& v : gmean) v /= static_cast<double>(n);
  const Matrix gcov = global_covariance(x, gmean);

  // Hard assignment to k-means++ centers seeds the first M step.
  const std::vector<std::size_t> centers = kmeanspp_centers(x, k, rng);
  std::vector<std::size_t> assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double del = x(i, j) - x(centers[c], j);
        acc += del * del;
      }
      if (acc < best) {
        best = acc;
        assign[i] = c;
      }
    }
  }

  EmFit fit;
  fit.components.resize(k);
  Matrix resp(n, k);
  for (std::size_t i = 0; i < n; ++i) resp(i, assign[i]) = 1.0;

  const auto m_step = [&]() {
    for (std::size_t c = 0; c < k; ++c) {
      GaussianComponent& comp = fit.components[c];
      double nk = 0.0;
      for (std::size_t i = 0; i < n; ++i) nk += resp(i, c);
      if (nk < 1e-10) {
        // Collapsed component: re-center on a random row, widen to the
        // global covariance.
        comp.weight = 1.0 / static_cast<double>(n);
        comp.mean.assign(d, 0.0);
        const std::size_t r = rng.uniform_below(n);
        for (std::size_t j = 0; j < d; ++j) comp.mean[j] = x(r, j);
        comp.covariance = gcov;
        continue;
      }
      comp.weight = nk / static_cast<double>(n);
      comp.mean.assign(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double w = resp(i, c);
        if (w == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) comp.mean[j] += w * x(i, j);
      }
      for (auto& v : comp.mean) v /= nk;
      comp.covariance = Matrix(d, d);
      for (std::size_t i = 0; i < n; ++i) {
        const double w = resp(i, c);
        if (w == 0.0) continue;
        for (std::size_t a = 0; a < d; ++a) {
          const double da = x(i, a) - comp.mean[a];
          for (std::size_t b = 0; b <= a; ++b) {
            comp.covariance(a, b) += w * da * (x(i, b) - comp.mean[b]);
          }
        }
      }
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b <= a; ++b) {
          comp.covariance(a, b) /= nk;
          comp.covariance(b, a) = comp.covariance(a, b);
        }
        comp.covariance(a, a) += kRidge;
      }
    }
    // Renormalize weights (collapsed-component handling can unbalance them).
    double wsum = 0.0;
    for (const auto& c : fit.components) wsum += c.weight;
    for (auto& c : fit.components) c.weight /= wsum;
  };

  m_step();

  std::vector<CompDensity> dens(k);
  std::vector<double> logp(k);
  std::vector<double> work(d);
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < kMaxIters; ++iter) {
    for (std::size_t c = 0; c < k; ++c) dens[c] = prepare(fit.components[c]);
    double loglik = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        logp[c] = std::log(fit.components[c].weight) + dens[c].log_norm -
                  0.5 * maha2(dens[c], fit.components[c], x.row(i), work);
      }
      const double lse = logsumexp(logp);
      loglik += lse;
      for (std::size_t c = 0; c < k; ++c) resp(i, c) = std::exp(logp[c] - lse);
    }
    fit.history.push_back(loglik);
    fit.loglik = loglik;
    if (std::abs(loglik - prev) < kRelTol * (1.0 + std::abs(loglik))) break;
    prev = loglik;
    m_step();
  }

  for (auto& comp : fit.components) comp.chol = cholesky(comp.covariance);
  return fit;
}

}  // namespace

Matrix cholesky(const Matrix& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) {
    throw std::invalid_argument("cholesky: matrix not square");
  }
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = a(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      if (i == j) {
        if (acc <= 0.0) {
          throw std::runtime_error("cholesky: matrix not positive-definite");
        }
        l(i, i) = std::sqrt(acc);
      } else {
        l(i, j) = acc / l(j, j);
      }
    }
  }
  return l;
}

GaussianMixture fit_gmm(const Matrix& x, std::size_t max_components,
                        std::uint64_t seed) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (max_components == 0) {
    throw std::invalid_argument("fit_gmm: max_components must be >= 1");
  }
  if (n < 10 * d) {
    throw std::invalid_argument("fit_gmm: need at least 10*d samples");
  }
  double total_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (std::size_t r = 0; r < n; ++r) m += x(r, j);
    m /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double del = x(r, j) - m;
      total_var += del * del;
    }
  }
  if (total_var <= 0.0) {
    throw degenerate_batch_error("fit_gmm: data has zero variance");
  }

  GaussianMixture best;
  best.dim = d;
  double best_bic = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (std::size_t k = 1; k <= max_components; ++k) {
    Rng local = rng.fork(k);
    const EmFit fit = run_em(x, k, local);
    const double kk = static_cast<double>(k);
    const double dd = static_cast<double>(d);
    const double params = (kk - 1.0) + kk * dd + kk * dd * (dd + 1.0) / 2.0;
    const double bic =
        -2.0 * fit.loglik + params * std::log(static_cast<double>(n));
    if (bic < best_bic) {
      best_bic = bic;
      best.components = fit.components;
      best.chosen_k = k;
      best.bic = bic;
      best.loglik_history = fit.history;
    }
  }
  return best;
}

Matrix sample_mixture(const GaussianMixture& gmm, std::size_t n, Rng& rng) {
  const std::size_t d = gmm.dim;
  Matrix out(n, d);
  std::vector<double> z(d);
  for (std::size_t r = 0; r < n; ++r) {
    double u = rng.uniform();
    std::size_t c = gmm.components.size() - 1;
    for (std::size_t i = 0; i < gmm.components.size(); ++i) {
      u -= gmm.components[i].weight;
      if (u <= 0.0) {
        c = i;
        break;
      }
    }
    const GaussianComponent& comp = gmm.components[c];
    for (auto& v : z) v = rng.normal();
    for (std::size_t i = 0; i < d; ++i) {
      double acc = comp.mean[i];
      for (std::size_t j = 0; j <= i; ++j) acc += comp.chol(i, j) * z[j];
      out(r, i) = acc;
    }
  }
  return out;
}

double mixture_log_likelihood(const GaussianMixture& gmm, const Matrix& x) {
  const std::size_t k = gmm.components.size();
  std::vector<CompDensity> dens(k);
  for (std::size_t c = 0; c < k; ++c) dens[c] = prepare(gmm.components[c]);
  std::vector<double> logp(k);
  std::vector<double> work(gmm.dim);
  double loglik = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      logp[c] = std::log(gmm.components[c].weight) + dens[c].log_norm -
                0.5 * maha2(dens[c], gmm.components[c], x.row(i), work);
    }
    loglik += logsumexp(logp);
  }
  return loglik;
}

}  // namespace oad::synth
