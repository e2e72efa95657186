#include <cmath>
#include <cstddef>

#include "oad/simd/kernels.hpp"

namespace oad::simd::ref {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399;

// Below -708 exp underflows into denormals; both variants cut off there so
// they stay comparable lane-for-lane.
inline double exp_checked(double x) { return x < -708.0 ? 0.0 : std::exp(x); }

}  // namespace

void kde_density(const double* smp, std::size_t n, double h, const double* pts,
                 std::size_t m, double* out) {
  const double inv_h = 1.0 / h;
  const double scale = kInvSqrt2Pi / (static_cast<double>(n) * h);
  for (std::size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = (pts[j] - smp[i]) * inv_h;
      acc += exp_checked(-0.5 * t * t);
    }
    out[j] = acc * scale;
  }
}

void kde_density_grad(const double* smp, std::size_t n, double h,
                      const double* pts, const double* up, std::size_t m,
                      double* grad) {
  const double inv_h = 1.0 / h;
  const double scale = kInvSqrt2Pi / (static_cast<double>(n) * h * h);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double t = (pts[j] - smp[i]) * inv_h;
      acc += up[j] * t * exp_checked(-0.5 * t * t);
    }
    grad[i] = acc * scale;
  }
}

void gemm(const double* a, const double* b, double* c, std::size_t m,
          std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      const double ail = a[i * k + l];
      const double* brow = b + l * n;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += ail * brow[j];
    }
  }
}

void gemm_at_b(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < k * n; ++i) c[i] = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double* arow = a + r * k;
    const double* brow = b + r * n;
    for (std::size_t i = 0; i < k; ++i) {
      const double ari = arow[i];
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += ari * brow[j];
    }
  }
}

void gemm_a_bt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      c[i * n + j] = dot(a + i * k, b + j * k, k);
    }
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double sq_diff_sum(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void col_sum(const double* a, std::size_t m, std::size_t n, double* out) {
  for (std::size_t j = 0; j < n; ++j) out[j] = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double* arow = a + r * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += arow[j];
  }
}

}  // namespace oad::simd::ref
