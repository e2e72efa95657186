#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "oad/error.hpp"
#include "oad/rng.hpp"
#include "oad/synth/generators.hpp"
#include "oad/synth/gmm.hpp"

using namespace oad;

namespace {

// 2-D correlated Gaussian sample.
Matrix gaussian_source(std::size_t n, double mx, double my, double sx,
                       double sy, double rho, std::uint64_t seed) {
  Matrix out(n, 2);
  Rng rng(seed);
  const double resid = std::sqrt(1.0 - rho * rho);
  for (std::size_t r = 0; r < n; ++r) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    out(r, 0) = mx + sx * z1;
    out(r, 1) = my + sy * (rho * z1 + resid * z2);
  }
  return out;
}

Matrix two_blob_source(std::size_t n, std::uint64_t seed) {
  Matrix out(n, 2);
  Rng rng(seed);
  for (std::size_t r = 0; r < n; ++r) {
    const bool first = rng.uniform() < 0.5;
    out(r, 0) = (first ? -3.0 : 3.0) + 0.7 * rng.normal();
    out(r, 1) = (first ? -1.0 : 2.0) + 0.5 * rng.normal();
  }
  return out;
}

double column_mean(const Matrix& m, std::size_t j) {
  double acc = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) acc += m(r, j);
  return acc / static_cast<double>(m.rows());
}

double column_var(const Matrix& m, std::size_t j) {
  const double mean = column_mean(m, j);
  double acc = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    acc += (m(r, j) - mean) * (m(r, j) - mean);
  }
  return acc / static_cast<double>(m.rows());
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double worst = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    const double fa = static_cast<double>(i) / static_cast<double>(a.size());
    const double fb = static_cast<double>(j) / static_cast<double>(b.size());
    worst = std::max(worst, std::abs(fa - fb));
  }
  return worst;
}

std::vector<double> column(const Matrix& m, std::size_t j) {
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = m(r, j);
  return out;
}

}  // namespace

TEST_CASE("fit_gmm") {
  SUBCASE("single-Gaussian data selects one component in most seeds") {
    std::size_t picked_one = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Matrix x = gaussian_source(2000, 1.0, -2.0, 1.0, 0.6, 0.4, seed);
      const auto gmm = synth::fit_gmm(x, 5, seed);
      if (gmm.chosen_k == 1) ++picked_one;
    }
    CHECK(picked_one >= 9);
  }
  SUBCASE("two-blob data selects two components") {
    const Matrix x = two_blob_source(2000, 3);
    const auto gmm = synth::fit_gmm(x, 5, 3);
    CHECK(gmm.chosen_k == 2);
  }
  SUBCASE("weights sum to one") {
    const Matrix x = two_blob_source(1000, 4);
    const auto gmm = synth::fit_gmm(x, 4, 4);
    double wsum = 0.0;
    for (const auto& c : gmm.components) wsum += c.weight;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("log-likelihood is non-decreasing across EM iterations") {
    const Matrix x = two_blob_source(800, 5);
    const auto gmm = synth::fit_gmm(x, 3, 5);
    for (std::size_t i = 1; i < gmm.loglik_history.size(); ++i) {
      CHECK(gmm.loglik_history[i] >= gmm.loglik_history[i - 1] - 1e-9);
    }
  }
  SUBCASE("every fitted covariance admits a Cholesky factor") {
    const Matrix x = two_blob_source(900, 6);
    const auto gmm = synth::fit_gmm(x, 5, 6);
    for (const auto& c : gmm.components) {
      CHECK_NOTHROW(synth::cholesky(c.covariance));
      for (double v : c.chol.values()) CHECK(std::isfinite(v));
    }
  }
  SUBCASE("degenerate data rejected") {
    Matrix x(50, 2);
    for (auto& v : x.values()) v = 3.0;
    CHECK_THROWS_AS(synth::fit_gmm(x, 2, 0), degenerate_batch_error);
    Matrix tiny(5, 2);
    CHECK_THROWS_AS(synth::fit_gmm(tiny, 2, 0), std::invalid_argument);
  }
  SUBCASE("deterministic for a fixed seed") {
    const Matrix x = two_blob_source(600, 7);
    const auto g1 = synth::fit_gmm(x, 4, 9);
    const auto g2 = synth::fit_gmm(x, 4, 9);
    REQUIRE(g1.components.size() == g2.components.size());
    for (std::size_t c = 0; c < g1.components.size(); ++c) {
      CHECK(g1.components[c].mean == g2.components[c].mean);
      CHECK(g1.components[c].covariance.values() ==
            g2.components[c].covariance.values());
    }
  }
}

TEST_CASE("gen_local") {
  const Matrix x = gaussian_source(1500, 0.0, 0.0, 1.0, 1.0, 0.0, 10);
  const auto gmm = synth::fit_gmm(x, 3, 10);
  SUBCASE("alpha one reproduces the plain sampler bitwise") {
    Rng r1(11), r2(11);
    const Matrix a = synth::gen_local(gmm, 200, 1.0, r1);
    const Matrix b = synth::sample_mixture(gmm, 200, r2);
    CHECK(a.values() == b.values());
  }
  SUBCASE("alpha five scales the per-dimension variance") {
    Rng rng(12);
    const Matrix a = synth::gen_local(gmm, 10000, 5.0, rng);
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(column_var(a, j) == doctest::Approx(5.0).epsilon(0.10));
      CHECK(std::abs(column_mean(a, j)) < 3.0 * std::sqrt(5.0 / 10000.0) + 0.05);
    }
  }
}

TEST_CASE("gen_clustered") {
  const Matrix x = gaussian_source(1500, 1.0, 2.0, 1.0, 1.0, 0.0, 13);
  const auto gmm = synth::fit_gmm(x, 3, 13);
  SUBCASE("alpha one reproduces the plain sampler bitwise") {
    Rng r1(14), r2(14);
    const Matrix a = synth::gen_clustered(gmm, 150, 1.0, r1);
    const Matrix b = synth::sample_mixture(gmm, 150, r2);
    CHECK(a.values() == b.values());
  }
  SUBCASE("alpha five scales means, keeps variances") {
    Rng rng(15);
    const Matrix a = synth::gen_clustered(gmm, 10000, 5.0, rng);
    CHECK(column_mean(a, 0) == doctest::Approx(5.0).epsilon(0.05));
    CHECK(column_mean(a, 1) == doctest::Approx(10.0).epsilon(0.05));
    CHECK(column_var(a, 0) == doctest::Approx(1.0).epsilon(0.10));
    CHECK(column_var(a, 1) == doctest::Approx(1.0).epsilon(0.10));
  }
  SUBCASE("clustered anomalies separate linearly from normals at alpha 5") {
    Rng rng(16);
    const Matrix normals = synth::sample_mixture(gmm, 400, rng);
    const Matrix anomalies = synth::gen_clustered(gmm, 400, 5.0, rng);
    double min_dist = 1e300;
    for (std::size_t i = 0; i < normals.rows(); ++i) {
      for (std::size_t j = 0; j < anomalies.rows(); ++j) {
        const double dx = normals(i, 0) - anomalies(j, 0);
        const double dy = normals(i, 1) - anomalies(j, 1);
        min_dist = std::min(min_dist, std::sqrt(dx * dx + dy * dy));
      }
    }
    CHECK(min_dist > 0.0);
  }
}

TEST_CASE("gen_global") {
  const Matrix x = gaussian_source(2000, 0.0, 0.0, 0.5, 0.5, 0.0, 17);
  SUBCASE("samples keep inside the scaled box and reach toward it") {
    Rng rng(18);
    const double alpha = 1.1;
    const Matrix a = synth::gen_global(x, 10000, alpha, rng);
    for (std::size_t j = 0; j < 2; ++j) {
      double mn = x(0, j), mx = x(0, j);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        mn = std::min(mn, x(r, j));
        mx = std::max(mx, x(r, j));
      }
      double smn = a(0, j), smx = a(0, j);
      for (std::size_t r = 0; r < a.rows(); ++r) {
        smn = std::min(smn, a(r, j));
        smx = std::max(smx, a(r, j));
      }
      CHECK(smn >= alpha * mn - 1e-12);
      CHECK(smx <= alpha * mx + 1e-12);
      CHECK(smn < alpha * mn + 0.01 * (mx - mn));
      CHECK(smx > alpha * mx - 0.01 * (mx - mn));
      // uniform mean with a 3-standard-error band
      const double width = alpha * (mx - mn);
      const double se = width / std::sqrt(12.0 * 10000.0);
      CHECK(std::abs(column_mean(a, j) - alpha * (mn + mx) / 2.0) <
            3.0 * se + 1e-9);
    }
  }
  SUBCASE("alpha one keeps the original box") {
    Matrix unit(2, 1, {0.0, 1.0});
    Rng rng(19);
    const Matrix a = synth::gen_global(unit, 5000, 1.0, rng);
    for (std::size_t r = 0; r < a.rows(); ++r) {
      CHECK(a(r, 0) >= 0.0);
      CHECK(a(r, 0) <= 1.0);
    }
  }
}

TEST_CASE("gen_dependency") {
  SUBCASE("rank correlation kept for normals, removed for anomalies") {
    const Matrix x = gaussian_source(1500, 0.0, 0.0, 1.0, 1.0, 0.9, 20);
    const auto [normals, anomalies] = synth::gen_dependency(x, 10000, 10000, 21);
    const Matrix rho_n = synth::spearman_correlation(normals);
    const Matrix rho_a = synth::spearman_correlation(anomalies);
    CHECK(std::abs(rho_n(0, 1) - 0.9) < 0.1);
    CHECK(std::abs(rho_a(0, 1)) < 0.1);
  }
  SUBCASE("marginals of normals and anomalies agree") {
    const Matrix x = gaussian_source(800, 2.0, -1.0, 1.5, 0.7, 0.8, 22);
    const auto [normals, anomalies] = synth::gen_dependency(x, 10000, 10000, 23);
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(ks_statistic(column(normals, j), column(anomalies, j)) < 0.05);
    }
  }
  SUBCASE("one dimension leaves nothing to break") {
    Matrix x(400, 1);
    Rng rng(24);
    for (auto& v : x.values()) v = rng.normal() * 2.0 + 1.0;
    const auto [normals, anomalies] = synth::gen_dependency(x, 8000, 8000, 25);
    CHECK(ks_statistic(column(normals, 0), column(anomalies, 0)) < 0.05);
  }
}

TEST_CASE("KdeMarginal round trip") {
  Rng rng(26);
  std::vector<double> samples(500);
  for (auto& v : samples) v = std::exp(rng.normal());  // skewed marginal
  const synth::KdeMarginal marginal(samples);
  for (double u : {0.05, 0.25, 0.5, 0.75, 0.95}) {
    const double x = marginal.quantile(u);
    CHECK(std::abs(marginal.cdf(x) - u) <= 2e-6);
  }
  // constant feature short-circuits
  const synth::KdeMarginal flat(std::vector<double>(40, 7.5));
  CHECK(flat.quantile(0.3) == 7.5);
}

TEST_CASE("make_synthetic_dataset") {
  const Matrix x = two_blob_source(1200, 27);
  synth::SynthSpec spec;
  spec.type = synth::AnomalyType::clustered;
  spec.alpha = 5.0;
  spec.n_normals = 950;
  spec.anomaly_ratio = 0.05;
  spec.seed = 28;
  SUBCASE("row arithmetic") {
    const auto ds = synth::make_synthetic_dataset(x, spec);
    CHECK(ds.n() == 1000);
    CHECK(ds.anomaly_count() == 50);
    for (auto v : ds.visibility) CHECK(v == 0);
  }
  SUBCASE("same spec and seed reproduce the dataset") {
    const auto d1 = synth::make_synthetic_dataset(x, spec);
    const auto d2 = synth::make_synthetic_dataset(x, spec);
    CHECK(d1.features.values() == d2.features.values());
    CHECK(d1.labels == d2.labels);
  }
  SUBCASE("all four types produce valid datasets") {
    for (auto type :
         {synth::AnomalyType::local, synth::AnomalyType::global,
          synth::AnomalyType::clustered, synth::AnomalyType::dependency}) {
      synth::SynthSpec s2 = spec;
      s2.type = type;
      s2.alpha = synth::default_alpha(type);
      s2.n_normals = 190;
      const auto ds = synth::make_synthetic_dataset(x, s2);
      CHECK(ds.n() == 200);
      CHECK(ds.anomaly_count() == 10);
      for (double v : ds.features.values()) CHECK(std::isfinite(v));
    }
  }
}
