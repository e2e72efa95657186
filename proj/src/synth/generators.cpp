#include "oad/synth/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oad::synth {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

GaussianMixture scale_covariances(GaussianMixture gmm, double alpha) {
  for (auto& comp : gmm.components) {
    for (auto& v : comp.covariance.values()) v *= alpha;
    comp.chol = cholesky(comp.covariance);
  }
  return gmm;
}

GaussianMixture scale_means(GaussianMixture gmm, double alpha) {
  for (auto& comp : gmm.components) {
    for (auto& v : comp.mean) v *= alpha;
  }
  return gmm;
}

}  // namespace

AnomalyType anomaly_type_from_string(const std::string& s) {
  if (s == "local") return AnomalyType::local;
  if (s == "global") return AnomalyType::global;
  if (s == "clustered") return AnomalyType::clustered;
  if (s == "dependency") return AnomalyType::dependency;
  throw std::invalid_argument("unknown anomaly type: " + s);
}

const char* anomaly_type_name(AnomalyType t) {
  switch (t) {
    case AnomalyType::local:
      return "local";
    case AnomalyType::global:
      return "global";
    case AnomalyType::clustered:
      return "clustered";
    case AnomalyType::dependency:
      return "dependency";
  }
  return "unknown";
}

double default_alpha(AnomalyType t) {
  return t == AnomalyType::global ? 1.1 : 5.0;
}

Matrix gen_local(const GaussianMixture& gmm, std::size_t n, double alpha,
                 Rng& rng) {
  return sample_mixture(scale_covariances(gmm, alpha), n, rng);
}

Matrix gen_global(const Matrix& x, std::size_t n, double alpha, Rng& rng) {
  if (x.rows() == 0) {
    throw std::invalid_argument("gen_global: empty source data");
  }
  const std::size_t d = x.cols();
  std::vector<double> lo(d), hi(d);
  for (std::size_t j = 0; j < d; ++j) {
    double mn = x(0, j);
    double mx = x(0, j);
    for (std::size_t r = 1; r < x.rows(); ++r) {
      mn = std::min(mn, x(r, j));
      mx = std::max(mx, x(r, j));
    }
    lo[j] = std::min(alpha * mn, alpha * mx);
    hi[j] = std::max(alpha * mn, alpha * mx);
  }
  Matrix out(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      out(r, j) = rng.uniform(lo[j], hi[j]);
    }
  }
  return out;
}

Matrix gen_clustered(const GaussianMixture& gmm, std::size_t n, double alpha,
                     Rng& rng) {
  return sample_mixture(scale_means(gmm, alpha), n, rng);
}

KdeMarginal::KdeMarginal(std::vector<double> samples, std::size_t grid_points)
    : samples_(std::move(samples)) {
  if (samples_.empty()) {
    throw std::invalid_argument("KdeMarginal: no samples");
  }
  const std::size_t n = samples_.size();
  std::vector<double> sorted(samples_);
  std::sort(sorted.begin(), sorted.end());
  const double q1 = sorted[static_cast<std::size_t>(0.25 * (n - 1))];
  const double q3 = sorted[static_cast<std::size_t>(0.75 * (n - 1))];
  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : sorted) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);
  const double iqr = q3 - q1;

  // Silverman's rule of thumb.
  double spread = sd;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  h_ = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  if (!(h_ > 0.0)) return;  // constant feature: quantile() short-circuits

  const double lo = sorted.front() - 8.0 * h_;
  const double hi = sorted.back() + 8.0 * h_;
  grid_x_.resize(grid_points);
  grid_cdf_.resize(grid_points);
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  for (std::size_t k = 0; k < grid_points; ++k) {
    grid_x_[k] = lo + static_cast<double>(k) * step;
    grid_cdf_[k] = cdf(grid_x_[k]);
  }
}

double KdeMarginal::cdf(double x) const {
  if (!(h_ > 0.0)) return x < samples_[0] ? 0.0 : 1.0;
  double acc = 0.0;
  for (double s : samples_) acc += normal_cdf((x - s) / h_);
  return acc / static_cast<double>(samples_.size());
}

double KdeMarginal::quantile(double u) const {
  if (!(h_ > 0.0)) return samples_[0];
  u = std::clamp(u, 1e-12, 1.0 - 1e-12);
  if (u <= grid_cdf_.front()) return grid_x_.front();
  if (u >= grid_cdf_.back()) return grid_x_.back();
  const auto it =
      std::lower_bound(grid_cdf_.begin(), grid_cdf_.end(), u);
  const std::size_t k = static_cast<std::size_t>(it - grid_cdf_.begin());
  double lo = grid_x_[k - 1];
  double hi = grid_x_[k];
  double flo = grid_cdf_[k - 1];
  double fhi = grid_cdf_[k];
  // Interpolate, then bisect on the analytic CDF down to 1e-6 in u.
  double x = fhi > flo ? lo + (u - flo) * (hi - lo) / (fhi - flo)
                       : 0.5 * (lo + hi);
  for (int iter = 0; iter < 60; ++iter) {
    const double f = cdf(x);
    if (std::abs(f - u) <= 1e-6) break;
    if (f < u) {
      lo = x;
    } else {
      hi = x;
    }
    x = 0.5 * (lo + hi);
  }
  return x;
}

Matrix spearman_correlation(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Matrix ranks(n, d);
  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return x(a, j) < x(b, j);
    });
    std::size_t i = 0;
    while (i < n) {
      std::size_t k = i;
      while (k + 1 < n && x(order[k + 1], j) == x(order[i], j)) ++k;
      const double avg = 0.5 * static_cast<double>(i + k) + 1.0;
      for (std::size_t t = i; t <= k; ++t) ranks(order[t], j) = avg;
      i = k + 1;
    }
  }
  Matrix corr(d, d);
  std::vector<double> mean(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) mean[j] += ranks(i, j);
    mean[j] /= static_cast<double>(n);
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double num = 0.0, va = 0.0, vb = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double da = ranks(i, a) - mean[a];
        const double db = ranks(i, b) - mean[b];
        num += da * db;
        va += da * da;
        vb += db * db;
      }
      const double denom = std::sqrt(va * vb);
      corr(a, b) = denom > 0.0 ? num / denom : (a == b ? 1.0 : 0.0);
      corr(b, a) = corr(a, b);
    }
  }
  return corr;
}

std::pair<Matrix, Matrix> gen_dependency(const Matrix& x,
                                         std::size_t n_normals,
                                         std::size_t n_anomalies,
                                         std::uint64_t seed) {
  const std::size_t d = x.cols();
  if (x.rows() < 10 * d) {
    throw std::invalid_argument("gen_dependency: need at least 10*d samples");
  }

  std::vector<KdeMarginal> marginals;
  marginals.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> col(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) col[i] = x(i, j);
    marginals.emplace_back(std::move(col));
  }

  // Gaussian copula correlation from Spearman's rho.
  const Matrix rho = spearman_correlation(x);
  Matrix gauss(d, d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      gauss(a, b) =
          2.0 * std::sin(std::numbers::pi * rho(a, b) / 6.0);
    }
    gauss(a, a) = 1.0;
  }
  Matrix chol(d, d);
  double lambda = 0.0;
  for (;;) {
    Matrix trial = gauss;
    if (lambda > 0.0) {
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) {
          trial(a, b) = a == b ? 1.0 : gauss(a, b) / (1.0 + lambda);
        }
      }
    }
    try {
      chol = cholesky(trial);
      break;
    } catch (const std::runtime_error&) {
      lambda = lambda == 0.0 ? 1e-10 : lambda * 10.0;
      if (lambda > 0.1) {
        throw std::runtime_error(
            "gen_dependency: correlation matrix not repairable");
      }
    }
  }

  Rng rng(seed);
  std::vector<double> z(d);
  Matrix normals(n_normals, d);
  for (std::size_t r = 0; r < n_normals; ++r) {
    for (auto& v : z) v = rng.normal();
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j <= i; ++j) acc += chol(i, j) * z[j];
      normals(r, i) = marginals[i].quantile(normal_cdf(acc));
    }
  }
  Matrix anomalies(n_anomalies, d);
  for (std::size_t r = 0; r < n_anomalies; ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      anomalies(r, i) = marginals[i].quantile(rng.uniform());
    }
  }
  return {std::move(normals), std::move(anomalies)};
}

data::LabeledDataset make_synthetic_dataset(const Matrix& x_source,
                                            const SynthSpec& spec) {
  if (!(spec.anomaly_ratio > 0.0 && spec.anomaly_ratio < 1.0)) {
    throw std::invalid_argument("make_synthetic_dataset: bad anomaly ratio");
  }
  if (!(spec.alpha > 0.0)) {
    throw std::invalid_argument("make_synthetic_dataset: alpha must be > 0");
  }
  const std::size_t n_anoms = static_cast<std::size_t>(std::llround(
      spec.anomaly_ratio / (1.0 - spec.anomaly_ratio) *
      static_cast<double>(spec.n_normals)));

  Matrix normals;
  Matrix anomalies;
  Rng rng = Rng(spec.seed).fork(1);
  switch (spec.type) {
    case AnomalyType::local: {
      const GaussianMixture gmm =
          fit_gmm(x_source, spec.max_components, spec.seed);
      normals = sample_mixture(gmm, spec.n_normals, rng);
      anomalies = gen_local(gmm, n_anoms, spec.alpha, rng);
      break;
    }
    case AnomalyType::clustered: {
      const GaussianMixture gmm =
          fit_gmm(x_source, spec.max_components, spec.seed);
      normals = sample_mixture(gmm, spec.n_normals, rng);
      anomalies = gen_clustered(gmm, n_anoms, spec.alpha, rng);
      break;
    }
    case AnomalyType::global: {
      const GaussianMixture gmm =
          fit_gmm(x_source, spec.max_components, spec.seed);
      normals = sample_mixture(gmm, spec.n_normals, rng);
      anomalies = gen_global(x_source, n_anoms, spec.alpha, rng);
      break;
    }
    case AnomalyType::dependency: {
      auto pair = gen_dependency(x_source, spec.n_normals, n_anoms,
                                 Rng(spec.seed).fork(2).next_u64());
      normals = std::move(pair.first);
      anomalies = std::move(pair.second);
      break;
    }
  }

  const std::size_t total = normals.rows() + anomalies.rows();
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  Rng shuffle_rng = Rng(spec.seed).fork(3);
  shuffle_rng.shuffle(order);

  data::LabeledDataset ds;
  ds.features = Matrix(total, normals.cols());
  ds.labels.resize(total);
  ds.visibility.assign(total, 0);
  for (std::size_t r = 0; r < total; ++r) {
    const std::size_t src = order[r];
    if (src < normals.rows()) {
      for (std::size_t j = 0; j < normals.cols(); ++j) {
        ds.features(r, j) = normals(src, j);
      }
      ds.labels[r] = 0;
    } else {
      const std::size_t a = src - normals.rows();
      for (std::size_t j = 0; j < anomalies.cols(); ++j) {
        ds.features(r, j) = anomalies(a, j);
      }
      ds.labels[r] = 1;
    }
  }
  return ds;
}

}  // namespace oad::synth
