#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "oad/rng.hpp"
#include "oad/simd/kernels.hpp"
#include "testutil.hpp"

using namespace oad;

namespace {

#if defined(OAD_X86_64)
bool avx2_available() {
  return simd::active_level() == simd::IsaLevel::avx2;
}
#endif

// floor guards near-zero accumulations where FMA-vs-separate rounding
// dominates the relative view.
double max_rel(const std::vector<double>& a, const std::vector<double>& b,
               double floor = 1e-300) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("scalar kde density matches a naive direct sum") {
  Rng rng(1);
  const auto smp = testutil::random_normal_vector(rng, 37, 0.0, 2.0);
  const auto pts = testutil::random_vector(rng, 11, -5.0, 5.0);
  const double h = 0.7;
  std::vector<double> out(pts.size());
  simd::ref::kde_density(smp.data(), smp.size(), h, pts.data(), pts.size(),
                         out.data());
  for (std::size_t j = 0; j < pts.size(); ++j) {
    double acc = 0.0;
    for (double s : smp) {
      const double t = (pts[j] - s) / h;
      acc += std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
    }
    acc /= static_cast<double>(smp.size()) * h;
    CHECK(out[j] == doctest::Approx(acc).epsilon(1e-12));
  }
}

#if defined(OAD_X86_64)

TEST_CASE("vectorized exp agrees with std::exp") {
  if (!avx2_available()) return;
  Rng rng(2);
  for (int rep = 0; rep < 4096; ++rep) {
    double x[4], out[4];
    for (auto& v : x) v = rng.uniform(-707.0, 30.0);
    simd::avx2::exp4(x, out);
    for (int i = 0; i < 4; ++i) {
      const double expect = std::exp(x[i]);
      CHECK(std::abs(out[i] - expect) <=
            1e-14 * std::max(std::abs(expect), 1e-300));
    }
  }
  // Underflow region flushes to zero.
  double x[4] = {-709.0, -800.0, -10000.0, 0.0};
  double out[4];
  simd::avx2::exp4(x, out);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);
  CHECK(out[2] == 0.0);
  CHECK(out[3] == 1.0);
}

TEST_CASE("avx2 kernels are equivalent to scalar reference") {
  if (!avx2_available()) return;
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 1 + rng.uniform_below(100);
    const std::size_t m = 1 + rng.uniform_below(60);
    const double h = rng.uniform(0.1, 3.0);
    const auto smp = testutil::random_normal_vector(rng, n, 0.0, 3.0);
    const auto pts = testutil::random_vector(rng, m, -8.0, 8.0);
    const auto up = testutil::random_vector(rng, m, -1.0, 1.0);

    std::vector<double> d_ref(m), d_avx(m);
    simd::ref::kde_density(smp.data(), n, h, pts.data(), m, d_ref.data());
    simd::avx2::kde_density(smp.data(), n, h, pts.data(), m, d_avx.data());
    CHECK(max_rel(d_ref, d_avx) < 1e-12);

    std::vector<double> g_ref(n), g_avx(n);
    simd::ref::kde_density_grad(smp.data(), n, h, pts.data(), up.data(), m,
                                g_ref.data());
    simd::avx2::kde_density_grad(smp.data(), n, h, pts.data(), up.data(), m,
                                 g_avx.data());
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(g_ref[i] - g_avx[i]) <=
            1e-11 * std::max({std::abs(g_ref[i]), std::abs(g_avx[i]), 1e-6}));
    }
  }
}

TEST_CASE("avx2 gemm family equivalent to scalar reference") {
  if (!avx2_available()) return;
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t m = 1 + rng.uniform_below(20);
    const std::size_t k = 1 + rng.uniform_below(20);
    const std::size_t n = 1 + rng.uniform_below(20);
    const auto a = testutil::random_vector(rng, m * k, -2.0, 2.0);
    const auto b = testutil::random_vector(rng, k * n, -2.0, 2.0);
    const auto b2 = testutil::random_vector(rng, m * n, -2.0, 2.0);
    const auto b3 = testutil::random_vector(rng, n * k, -2.0, 2.0);

    std::vector<double> c_ref(m * n), c_avx(m * n);
    simd::ref::gemm(a.data(), b.data(), c_ref.data(), m, k, n);
    simd::avx2::gemm(a.data(), b.data(), c_avx.data(), m, k, n);
    CHECK(max_rel(c_ref, c_avx, 1.0) < 1e-12);

    std::vector<double> t_ref(k * n), t_avx(k * n);
    simd::ref::gemm_at_b(a.data(), b2.data(), t_ref.data(), m, k, n);
    simd::avx2::gemm_at_b(a.data(), b2.data(), t_avx.data(), m, k, n);
    CHECK(max_rel(t_ref, t_avx, 1.0) < 1e-12);

    std::vector<double> u_ref(m * n), u_avx(m * n);
    simd::ref::gemm_a_bt(a.data(), b3.data(), u_ref.data(), m, k, n);
    simd::avx2::gemm_a_bt(a.data(), b3.data(), u_avx.data(), m, k, n);
    CHECK(max_rel(u_ref, u_avx, 1.0) < 1e-12);
  }
}

TEST_CASE("avx2 reductions equivalent to scalar reference") {
  if (!avx2_available()) return;
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 1 + rng.uniform_below(300);
    const auto a = testutil::random_vector(rng, n, -3.0, 3.0);
    const auto b = testutil::random_vector(rng, n, -3.0, 3.0);
    CHECK(simd::ref::dot(a.data(), b.data(), n) ==
          doctest::Approx(simd::avx2::dot(a.data(), b.data(), n))
              .epsilon(1e-12));
    CHECK(simd::ref::sum(a.data(), n) ==
          doctest::Approx(simd::avx2::sum(a.data(), n)).epsilon(1e-12));
    CHECK(simd::ref::sq_diff_sum(a.data(), b.data(), n) ==
          doctest::Approx(simd::avx2::sq_diff_sum(a.data(), b.data(), n))
              .epsilon(1e-12));

    std::vector<double> y_ref(b), y_avx(b);
    simd::ref::axpy(1.7, a.data(), y_ref.data(), n);
    simd::avx2::axpy(1.7, a.data(), y_avx.data(), n);
    CHECK(max_rel(y_ref, y_avx, 1.0) < 1e-12);

    const std::size_t rows = 1 + rng.uniform_below(10);
    const auto mat = testutil::random_vector(rng, rows * n, -2.0, 2.0);
    std::vector<double> cs_ref(n), cs_avx(n);
    simd::ref::col_sum(mat.data(), rows, n, cs_ref.data());
    simd::avx2::col_sum(mat.data(), rows, n, cs_avx.data());
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(std::abs(cs_ref[j] - cs_avx[j]) <=
            1e-12 * std::max({std::abs(cs_ref[j]), 1.0}));
    }
  }
}

#endif  // OAD_X86_64

TEST_CASE("dispatch reports a usable level") {
  const simd::IsaLevel level = simd::active_level();
  CHECK((level == simd::IsaLevel::scalar || level == simd::IsaLevel::avx2));
  CHECK(simd::level_name(level) != nullptr);
}
