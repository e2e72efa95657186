#pragma once

#include <cstdint>
#include <vector>

#include "oad/matrix.hpp"
#include "oad/rng.hpp"

namespace oad::synth {

struct GaussianComponent {
  double weight = 0.0;
  std::vector<double> mean;
  Matrix covariance;  // d x d, symmetric positive-definite
  Matrix chol;        // lower-triangular factor of covariance
};

struct GaussianMixture {
  std::size_t dim = 0;
  std::vector<GaussianComponent> components;
  std::size_t chosen_k = 0;
  double bic = 0.0;
  std::vector<double> loglik_history;  // of the selected fit
};

// Lower-triangular Cholesky factor; throws if the matrix is not PD.
Matrix cholesky(const Matrix& a);

// Full-covariance EM for k = 1..max_components with ridge-regularized
// covariances (1e-6 on the diagonal), model chosen by minimum BIC.
// k-means++-style seeding; deterministic for a given seed.
GaussianMixture fit_gmm(const Matrix& x, std::size_t max_components,
                        std::uint64_t seed);

Matrix sample_mixture(const GaussianMixture& gmm, std::size_t n, Rng& rng);

double mixture_log_likelihood(const GaussianMixture& gmm, const Matrix& x);

}  // namespace oad::synth
