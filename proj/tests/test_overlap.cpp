#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "oad/error.hpp"
#include "oad/overlap/overlap.hpp"
#include "oad/rng.hpp"
#include "testutil.hpp"

using namespace oad;
using overlap::OverlapConfig;
using overlap::ScoreBatch;

namespace {

double log_normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * M_PI);
}

ScoreBatch cluster_batch(Rng& rng, double mean_n, double mean_a,
                         double spread, std::size_t per_side) {
  ScoreBatch b;
  b.s_n = testutil::random_vector(rng, per_side, mean_n - spread,
                                  mean_n + spread);
  b.s_a = testutil::random_vector(rng, per_side, mean_a - spread,
                                  mean_a + spread);
  return b;
}

// Rescales a vector to exact biased sample moments (mean, sigma).
std::vector<double> with_moments(std::vector<double> base, double mean,
                                 double sigma) {
  double m = 0.0;
  for (double v : base) m += v;
  m /= static_cast<double>(base.size());
  double var = 0.0;
  for (double v : base) var += (v - m) * (v - m);
  var /= static_cast<double>(base.size());
  const double s = std::sqrt(var);
  for (auto& v : base) v = mean + (v - m) * sigma / s;
  return base;
}

}  // namespace

TEST_CASE("gaussian_intersection") {
  SUBCASE("equal deviations give the midpoint") {
    CHECK(overlap::gaussian_intersection(0.0, 1.0, 2.0, 1.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("identical distributions give the common mean") {
    CHECK(overlap::gaussian_intersection(0.7, 1.3, 0.7, 1.3) ==
          doctest::Approx(0.7).epsilon(1e-12));
  }
  SUBCASE("matches the bisection root of the log-density difference") {
    const double c = overlap::gaussian_intersection(0.0, 1.0, 3.0, 2.0);
    const double root = testutil::bisect(
        [](double x) {
          return log_normal_pdf(x, 0.0, 1.0) - log_normal_pdf(x, 3.0, 2.0);
        },
        0.0, 3.0, 1e-12);
    CHECK(std::abs(c - root) < 1e-8);
  }
  SUBCASE("rejects non-positive deviations") {
    CHECK_THROWS_AS(overlap::gaussian_intersection(0.0, 0.0, 1.0, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(overlap::gaussian_intersection(0.0, 1.0, 1.0, -2.0),
                    std::invalid_argument);
  }
}

TEST_CASE("find_intersections") {
  OverlapConfig cfg;
  SUBCASE("well-separated symmetric clusters cross once near the midpoint") {
    ScoreBatch b;
    for (int i = 0; i <= 10; ++i) {
      b.s_n.push_back(-3.0 + 0.1 * i);
      b.s_a.push_back(2.0 + 0.1 * i);
    }
    Rng rng(1);
    const auto res = overlap::find_intersections(b, cfg, rng);
    CHECK(res.candidates.size() == 1);
    CHECK(!res.extended);
    // Oracle: independent scan of the kernel-mixture density difference on
    // the same arithmetic grid.
    const auto density = [&](const std::vector<double>& smp, double x) {
      double acc = 0.0;
      for (double s : smp) {
        acc += std::exp(-0.5 * (x - s) * (x - s)) / std::sqrt(2.0 * M_PI);
      }
      return acc / static_cast<double>(smp.size());
    };
    std::vector<double> crossings;
    const double lo = -3.0, hi = 3.0;
    double prev = density(b.s_a, lo) - density(b.s_n, lo);
    for (std::size_t k = 1; k <= cfg.grid_n; ++k) {
      const double x = lo + (hi - lo) * static_cast<double>(k) /
                                static_cast<double>(cfg.grid_n);
      const double cur = density(b.s_a, x) - density(b.s_n, x);
      if ((cur > 0.0) != (prev > 0.0) || cur == 0.0 || prev == 0.0) {
        crossings.push_back(x);
      }
      prev = cur;
    }
    REQUIRE(crossings.size() == 1);
    CHECK(std::abs(res.chosen_c - crossings[0]) <=
          (hi - lo) / static_cast<double>(cfg.grid_n) + 1e-12);
    // symmetric construction: the crossing sits at the global midpoint
    CHECK(std::abs(res.chosen_c - 0.0) < 2.0 * (hi - lo) / 1000.0 + 1e-9);
  }
  SUBCASE("identical sides take the fallback and stay inside the range") {
    ScoreBatch b;
    b.s_n = {0.0, 0.5, 1.0, 1.5};
    b.s_a = b.s_n;
    Rng rng(2);
    const auto res = overlap::find_intersections(b, cfg, rng);
    CHECK(res.fallback);
    CHECK(res.extended);
    CHECK(res.chosen_c >=
          res.base_lo - cfg.extension_width * cfg.bandwidth - 1e-12);
    CHECK(res.chosen_c <=
          res.base_hi + cfg.extension_width * cfg.bandwidth + 1e-12);
  }
  SUBCASE("swapping sides leaves the candidate set unchanged") {
    Rng data_rng(3);
    ScoreBatch b;
    b.s_n = testutil::random_normal_vector(data_rng, 20, 0.0, 1.0);
    b.s_a = testutil::random_normal_vector(data_rng, 16, 1.0, 1.5);
    ScoreBatch swapped;
    swapped.s_n = b.s_a;
    swapped.s_a = b.s_n;
    Rng r1(4), r2(4);
    const auto res1 = overlap::find_intersections(b, cfg, r1);
    const auto res2 = overlap::find_intersections(swapped, cfg, r2);
    CHECK(res1.candidates == res2.candidates);
  }
  SUBCASE("degenerate batch") {
    ScoreBatch b;
    b.s_n = {1.0, 1.0};
    b.s_a = {1.0};
    Rng rng(5);
    CHECK_THROWS_AS(overlap::find_intersections(b, cfg, rng),
                    degenerate_batch_error);
  }
  SUBCASE("multiple crossings: broad side straddling a narrow one") {
    // narrow tall s_a hump inside a wide flat s_n spread: the difference
    // changes sign on both flanks of the hump
    OverlapConfig tight = cfg;
    tight.bandwidth = 0.25;
    ScoreBatch b;
    for (int i = 0; i < 40; ++i) b.s_n.push_back(-4.0 + 8.0 * i / 39.0);
    for (int i = 0; i < 40; ++i) b.s_a.push_back(-0.2 + 0.4 * i / 39.0);
    Rng rng(6);
    const auto res = overlap::find_intersections(b, tight, rng);
    REQUIRE(res.candidates.size() >= 2);
    CHECK(std::is_sorted(res.candidates.begin(), res.candidates.end()));
    // one candidate on each side of the hump
    CHECK(res.candidates.front() < 0.0);
    CHECK(res.candidates.back() > 0.0);
    bool chosen_is_candidate = false;
    for (double c : res.candidates) {
      if (c == res.chosen_c) chosen_is_candidate = true;
    }
    CHECK(chosen_is_candidate);
    // the random pick spreads over the candidates
    std::set<double> seen;
    for (int rep = 0; rep < 64; ++rep) {
      Rng rr(100 + rep);
      seen.insert(overlap::find_intersections(b, tight, rr).chosen_c);
    }
    CHECK(seen.size() >= 2);
  }
}

TEST_CASE("trapezoid_cdf") {
  const auto const_one = [](std::span<const double> pts) {
    return std::vector<double>(pts.size(), 1.0);
  };
  SUBCASE("constant density over the full interval") {
    CHECK(overlap::trapezoid_cdf(const_one, 1.0, 0.0, 1000) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("constant density over half the interval") {
    CHECK(overlap::trapezoid_cdf(const_one, 0.5, 0.0, 1000) ==
          doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("c below lo is an error") {
    CHECK_THROWS_AS(overlap::trapezoid_cdf(const_one, -0.5, 0.0, 10),
                    std::invalid_argument);
  }
  SUBCASE("kernel mixture at the sample median vs the analytic CDF") {
    Rng rng(6);
    const auto samples = testutil::random_normal_vector(rng, 256, 0.0, 1.0);
    kde::DensityEstimate est(samples, 1.0);
    std::vector<double> sorted(samples);
    std::sort(sorted.begin(), sorted.end());
    const double median = 0.5 * (sorted[127] + sorted[128]);
    const double lo = sorted.front();
    const double approx = overlap::trapezoid_cdf(est, median, lo, 1000);
    // Oracle: exact CDF of the kernel mixture over [lo, median].
    double exact = 0.0;
    for (double s : samples) {
      exact += overlap::normal_cdf(median - s) - overlap::normal_cdf(lo - s);
    }
    exact /= static_cast<double>(samples.size());
    CHECK(std::abs(approx - exact) < 1e-4);
    CHECK(std::abs(approx - 0.5) < 0.05);
  }
}

TEST_CASE("overlap_loss") {
  OverlapConfig cfg;
  SUBCASE("well-separated correct order is near zero") {
    Rng rng(7);
    const ScoreBatch b = cluster_batch(rng, -5.0, 5.0, 0.05, 24);
    Rng lr(8);
    const auto res = overlap::overlap_loss(b, cfg, lr);
    CHECK(res.loss < 0.01);
    CHECK(res.loss >= 0.0);
  }
  SUBCASE("reversed order approaches the upper bound") {
    Rng rng(9);
    ScoreBatch b = cluster_batch(rng, 5.0, -5.0, 0.05, 24);
    Rng lr(10);
    const auto res = overlap::overlap_loss(b, cfg, lr);
    CHECK(res.loss > 1.95);
    CHECK(res.loss <= 2.0);
  }
  SUBCASE("identical sides give one") {
    Rng rng(11);
    ScoreBatch b;
    b.s_n = testutil::random_normal_vector(rng, 32, 0.0, 1.0);
    b.s_a = b.s_n;
    Rng lr(12);
    const auto res = overlap::overlap_loss(b, cfg, lr);
    CHECK(res.loss == doctest::Approx(1.0).epsilon(0.05));
  }
  SUBCASE("gradient matches finite differences with the plan frozen") {
    Rng rng(13);
    for (int rep = 0; rep < 4; ++rep) {
      ScoreBatch b;
      b.s_n = testutil::random_normal_vector(rng, 6, 0.0, 1.0);
      b.s_a = testutil::random_normal_vector(rng, 5, 0.8, 1.2);
      Rng pr(100 + rep);
      const auto plan = overlap::find_intersections(b, cfg, pr);
      const auto res = overlap::overlap_loss_at(b, cfg, plan);
      std::vector<double> flat(b.s_n);
      flat.insert(flat.end(), b.s_a.begin(), b.s_a.end());
      const auto numeric = testutil::finite_difference(
          [&](const std::vector<double>& x) {
            ScoreBatch p;
            p.s_n.assign(x.begin(), x.begin() + 6);
            p.s_a.assign(x.begin() + 6, x.end());
            return overlap::overlap_loss_at(p, cfg, plan).loss;
          },
          flat, 1e-5);
      CHECK(testutil::max_grad_rel_err(res.score_grads, numeric) < 1e-4);
    }
  }
  SUBCASE("ensemble averages the per-candidate losses") {
    Rng rng(14);
    ScoreBatch b;
    b.s_n = testutil::random_normal_vector(rng, 24, 0.0, 0.6);
    b.s_a = testutil::random_normal_vector(rng, 24, 0.8, 1.8);
    OverlapConfig ens = cfg;
    ens.strategy = overlap::Strategy::ensemble;
    Rng r1(15);
    const auto plan = overlap::find_intersections(b, ens, r1);
    const auto res = overlap::overlap_loss_at(b, ens, plan);
    double mean = 0.0;
    for (double c : plan.candidates) {
      auto single = plan;
      single.candidates = {c};
      single.chosen_c = c;
      OverlapConfig one = cfg;
      one.strategy = overlap::Strategy::random_pick;
      mean += overlap::overlap_loss_at(b, one, single).loss;
    }
    mean /= static_cast<double>(plan.candidates.size());
    CHECK(res.loss == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("overlap_arbitrary") {
  OverlapConfig cfg;
  SUBCASE("disjoint far-apart distributions in either order") {
    Rng rng(16);
    const ScoreBatch correct = cluster_batch(rng, -8.0, 8.0, 0.05, 16);
    ScoreBatch reversed;
    reversed.s_n = correct.s_a;
    reversed.s_a = correct.s_n;
    CHECK(overlap::overlap_arbitrary(correct, cfg).loss < 0.01);
    CHECK(overlap::overlap_arbitrary(reversed, cfg).loss < 0.01);
  }
  SUBCASE("identical sides integrate the in-range kernel mass") {
    Rng rng(17);
    ScoreBatch b;
    b.s_n = testutil::random_normal_vector(rng, 24, 0.0, 2.0);
    b.s_a = b.s_n;
    const auto res = overlap::overlap_arbitrary(b, cfg);
    // Oracle: analytic CDF of the mixture between the sample extrema.
    double lo = b.s_n[0], hi = b.s_n[0];
    for (double v : b.s_n) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    double mass = 0.0;
    for (double s : b.s_n) {
      mass += overlap::normal_cdf(hi - s) - overlap::normal_cdf(lo - s);
    }
    mass /= static_cast<double>(b.s_n.size());
    CHECK(res.loss == doctest::Approx(mass).epsilon(1e-3));
    CHECK(res.loss > 0.5);
  }
  SUBCASE("symmetric under side swap") {
    Rng rng(18);
    ScoreBatch b;
    b.s_n = testutil::random_normal_vector(rng, 12, 0.0, 1.0);
    b.s_a = testutil::random_normal_vector(rng, 9, 0.7, 1.4);
    ScoreBatch swapped;
    swapped.s_n = b.s_a;
    swapped.s_a = b.s_n;
    CHECK(overlap::overlap_arbitrary(b, cfg).loss ==
          doctest::Approx(overlap::overlap_arbitrary(swapped, cfg).loss)
              .epsilon(1e-12));
  }
  SUBCASE("gradient matches finite differences on a frozen grid") {
    Rng rng(19);
    ScoreBatch b;
    b.s_n = testutil::random_normal_vector(rng, 5, 0.0, 1.0);
    b.s_a = testutil::random_normal_vector(rng, 7, 0.5, 1.1);
    const auto grid = kde::make_grid(b.s_n, b.s_a, cfg.grid_n);
    const auto res = overlap::overlap_arbitrary_on(b, cfg, grid.lo, grid.hi);
    std::vector<double> flat(b.s_n);
    flat.insert(flat.end(), b.s_a.begin(), b.s_a.end());
    const auto numeric = testutil::finite_difference(
        [&](const std::vector<double>& x) {
          ScoreBatch p;
          p.s_n.assign(x.begin(), x.begin() + 5);
          p.s_a.assign(x.begin() + 5, x.end());
          return overlap::overlap_arbitrary_on(p, cfg, grid.lo, grid.hi).loss;
        },
        flat, 1e-5);
    CHECK(testutil::max_grad_rel_err(res.score_grads, numeric) < 1e-4);
  }
}

TEST_CASE("ranking_term") {
  SUBCASE("correct order is zero") {
    ScoreBatch b{{0.0}, {1.0}};
    CHECK(overlap::ranking_term(b).loss == 0.0);
  }
  SUBCASE("reversed singleton") {
    ScoreBatch b{{1.0}, {0.0}};
    CHECK(overlap::ranking_term(b).loss == doctest::Approx(1.0));
  }
  SUBCASE("pair enumeration") {
    ScoreBatch b{{0.0, 2.0}, {1.0}};
    CHECK(overlap::ranking_term(b).loss == doctest::Approx(0.5));
  }
  SUBCASE("gradient matches finite differences away from ties") {
    ScoreBatch b;
    b.s_n = {0.3, -0.7, 1.9};
    b.s_a = {0.55, 1.2};
    const auto res = overlap::ranking_term(b);
    std::vector<double> flat(b.s_n);
    flat.insert(flat.end(), b.s_a.begin(), b.s_a.end());
    const auto numeric = testutil::finite_difference(
        [&](const std::vector<double>& x) {
          ScoreBatch p;
          p.s_n.assign(x.begin(), x.begin() + 3);
          p.s_a.assign(x.begin() + 3, x.end());
          return overlap::ranking_term(p).loss;
        },
        flat, 1e-5);
    CHECK(testutil::max_grad_rel_err(res.score_grads, numeric) < 1e-4);
  }
}

TEST_CASE("overlap_combined") {
  OverlapConfig cfg;
  SUBCASE("correct-order disjoint is near zero") {
    Rng rng(21);
    const ScoreBatch b = cluster_batch(rng, -6.0, 6.0, 0.05, 12);
    CHECK(overlap::overlap_combined(b, cfg).loss < 0.01);
  }
  SUBCASE("reversed disjoint approximates the mean pairwise gap") {
    Rng rng(22);
    const ScoreBatch b = cluster_batch(rng, 6.0, -6.0, 0.05, 12);
    double gap = 0.0;
    for (double sn : b.s_n) {
      for (double sa : b.s_a) gap += sn - sa;
    }
    gap /= static_cast<double>(b.s_n.size() * b.s_a.size());
    CHECK(overlap::overlap_combined(b, cfg).loss ==
          doctest::Approx(gap).epsilon(0.01));
  }
  SUBCASE("reduces to overlap_arbitrary when the ranking term vanishes") {
    Rng rng(23);
    ScoreBatch b;
    b.s_n = testutil::random_vector(rng, 10, -2.0, -1.0);
    b.s_a = testutil::random_vector(rng, 10, 1.0, 2.0);
    CHECK(overlap::ranking_term(b).loss == 0.0);
    CHECK(overlap::overlap_combined(b, cfg).loss ==
          doctest::Approx(overlap::overlap_arbitrary(b, cfg).loss)
              .epsilon(1e-12));
  }
}

TEST_CASE("overlap_gaussian") {
  SUBCASE("unit-deviation moments two apart") {
    ScoreBatch b;
    b.s_n = with_moments({-1.0, 0.2, 1.4, -0.6}, 0.0, 1.0);
    b.s_a = with_moments({0.0, 1.0, 2.5, 3.0}, 2.0, 1.0);
    const auto res = overlap::overlap_gaussian(b);
    CHECK(res.loss ==
          doctest::Approx(2.0 * overlap::normal_cdf(-1.0)).epsilon(1e-9));
  }
  SUBCASE("identical moments give one") {
    ScoreBatch b;
    b.s_n = with_moments({0.1, 0.5, -0.3, 0.9}, 0.4, 0.8);
    b.s_a = with_moments({2.0, -1.0, 0.0, 1.0}, 0.4, 0.8);
    CHECK(overlap::overlap_gaussian(b).loss ==
          doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("reversed well-separated moments approach two") {
    ScoreBatch b;
    b.s_n = with_moments({4.9, 5.0, 5.1, 5.05}, 5.0, 0.1);
    b.s_a = with_moments({-5.1, -5.0, -4.95, -4.9}, -5.0, 0.1);
    CHECK(overlap::overlap_gaussian(b).loss > 1.999);
    CHECK(overlap::overlap_gaussian(b).loss <= 2.0);
  }
  SUBCASE("zero variance is a degenerate batch") {
    ScoreBatch b;
    b.s_n = {1.0, 1.0, 1.0};
    b.s_a = {0.0, 1.0, 2.0};
    CHECK_THROWS_AS(overlap::overlap_gaussian(b), degenerate_batch_error);
  }
  SUBCASE("gradient matches finite differences with c frozen") {
    Rng rng(24);
    for (int rep = 0; rep < 4; ++rep) {
      ScoreBatch b;
      b.s_n = testutil::random_normal_vector(rng, 6, 0.0, 1.0);
      b.s_a = testutil::random_normal_vector(rng, 8, 1.0, 1.5);
      const auto full = overlap::overlap_gaussian(b);
      double mn = 0.0, ma = 0.0;
      for (double v : b.s_n) mn += v;
      for (double v : b.s_a) ma += v;
      mn /= 6.0;
      ma /= 8.0;
      double vn = 0.0, va = 0.0;
      for (double v : b.s_n) vn += (v - mn) * (v - mn);
      for (double v : b.s_a) va += (v - ma) * (v - ma);
      const double c = overlap::gaussian_intersection(
          mn, std::sqrt(vn / 6.0), ma, std::sqrt(va / 8.0));
      std::vector<double> flat(b.s_n);
      flat.insert(flat.end(), b.s_a.begin(), b.s_a.end());
      const auto numeric = testutil::finite_difference(
          [&](const std::vector<double>& x) {
            ScoreBatch p;
            p.s_n.assign(x.begin(), x.begin() + 6);
            p.s_a.assign(x.begin() + 6, x.end());
            return overlap::overlap_gaussian_with_c(p, c).loss;
          },
          flat, 1e-5);
      CHECK(testutil::max_grad_rel_err(full.score_grads, numeric) < 1e-4);
    }
  }
}

TEST_CASE("boundedness over random batches") {
  Rng rng(25);
  OverlapConfig cfg;
  cfg.grid_n = 200;  // smaller grid keeps the property sweep quick
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t nn = 2 + rng.uniform_below(40);
    const std::size_t na = 2 + rng.uniform_below(40);
    const double scale = std::pow(10.0, rng.uniform(-3.0, 3.0));
    ScoreBatch b;
    b.s_n = testutil::random_normal_vector(rng, nn, rng.uniform(-2.0, 2.0),
                                           scale);
    b.s_a = testutil::random_normal_vector(rng, na, rng.uniform(-2.0, 2.0),
                                           scale);
    Rng lr(1000 + rep);
    try {
      const auto res = overlap::overlap_loss(b, cfg, lr);
      CHECK(res.loss >= 0.0);
      CHECK(res.loss <= 2.0);
    } catch (const degenerate_batch_error&) {
      // collapsed random draws are allowed to refuse
    }
  }
}

TEST_CASE("order sensitivity: moving anomalies up does not raise the loss") {
  Rng rng(26);
  OverlapConfig cfg;
  ScoreBatch b;
  b.s_n = testutil::random_normal_vector(rng, 48, 0.0, 1.0);
  b.s_a = testutil::random_normal_vector(rng, 48, 0.0, 1.0);
  double prev = 2.0;
  const double tol_slack = 2.0 * (20.0 / 1000.0) * 0.4 + 1e-3;
  for (double shift = 0.0; shift <= 6.0; shift += 0.5) {
    ScoreBatch shifted = b;
    for (auto& v : shifted.s_a) v += shift;
    Rng lr(27);
    const double loss = overlap::overlap_loss(shifted, cfg, lr).loss;
    CHECK(loss <= prev + tol_slack);
    prev = loss;
  }
}
