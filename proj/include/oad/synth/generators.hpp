#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "oad/data/dataset.hpp"
#include "oad/matrix.hpp"
#include "oad/rng.hpp"
#include "oad/synth/gmm.hpp"

namespace oad::synth {

enum class AnomalyType { local, global, clustered, dependency };

AnomalyType anomaly_type_from_string(const std::string& s);
const char* anomaly_type_name(AnomalyType t);
double default_alpha(AnomalyType t);

struct SynthSpec {
  AnomalyType type = AnomalyType::local;
  double alpha = 5.0;
  std::size_t n_normals = 950;
  double anomaly_ratio = 0.05;
  std::uint64_t seed = 0;
  std::size_t max_components = 5;
};

// Mixture samples with every covariance scaled by alpha (means unchanged).
Matrix gen_local(const GaussianMixture& gmm, std::size_t n, double alpha,
                 Rng& rng);

// Per-feature independent uniforms on [alpha*min_k, alpha*max_k].
Matrix gen_global(const Matrix& x, std::size_t n, double alpha, Rng& rng);

// Mixture samples with every mean scaled by alpha (covariances unchanged).
Matrix gen_clustered(const GaussianMixture& gmm, std::size_t n, double alpha,
                     Rng& rng);

// Normals follow a Gaussian-copula fit of x (rank correlations mapped through
// per-feature KDE marginals); anomalies draw each feature independently from
// the same marginals.
std::pair<Matrix, Matrix> gen_dependency(const Matrix& x,
                                         std::size_t n_normals,
                                         std::size_t n_anomalies,
                                         std::uint64_t seed);

// n_normals generated normal rows (label 0) plus
// round(ratio/(1-ratio)*n_normals) anomalies (label 1), shuffled,
// visibility zeroed.
data::LabeledDataset make_synthetic_dataset(const Matrix& x_source,
                                            const SynthSpec& spec);

// Per-feature 1-D KDE with numeric quantile inversion; exposed for the
// dependency generator and its tests.
class KdeMarginal {
 public:
  KdeMarginal(std::vector<double> samples, std::size_t grid_points = 4096);

  double bandwidth() const { return h_; }
  double cdf(double x) const;
  double quantile(double u) const;

 private:
  std::vector<double> samples_;
  double h_ = 0.0;
  std::vector<double> grid_x_;
  std::vector<double> grid_cdf_;
};

// Spearman rank-correlation matrix of the columns of x.
Matrix spearman_correlation(const Matrix& x);

}  // namespace oad::synth
