#pragma once

#include <cstddef>

// Data-parallel inner loops: Gaussian-kernel density sums (the dominant cost
// of the overlap losses), small GEMMs for the scorer network, and vector
// reductions. Each kernel has a scalar reference implementation and, on
// x86-64, an AVX2+FMA variant selected once at startup. The two variants are
// equivalence-tested against each other; results differ only by summation
// order (and by the vectorized exp, accurate to ~1 ulp).

namespace oad::simd {

enum class IsaLevel { scalar, avx2 };

// Resolved once per process from CPUID; the OAD_SIMD environment variable
// ("scalar" or "avx2") overrides detection.
IsaLevel active_level();
const char* level_name(IsaLevel level);

// out[j] = 1/(n*h*sqrt(2*pi)) * sum_i exp(-((pts[j]-smp[i])/h)^2 / 2)
void kde_density(const double* smp, std::size_t n, double h, const double* pts,
                 std::size_t m, double* out);

// grad[i] = sum_j up[j] * t * phi(t) / (n*h^2)  with t = (pts[j]-smp[i])/h,
// phi the standard normal pdf. This is d/d smp[i] of sum_j up[j]*density(pts[j]).
void kde_density_grad(const double* smp, std::size_t n, double h,
                      const double* pts, const double* up, std::size_t m,
                      double* grad);

// Row-major GEMMs, c overwritten. Shapes: a[m x k], b[k x n] -> c[m x n].
void gemm(const double* a, const double* b, double* c, std::size_t m,
          std::size_t k, std::size_t n);
// c[k x n] = a^T * b with a[m x k], b[m x n].
void gemm_at_b(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
// c[m x n] = a * b^T with a[m x k], b[n x k].
void gemm_a_bt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
// sum_i (a[i]-b[i])^2
double sq_diff_sum(const double* a, const double* b, std::size_t n);
// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);
// out[j] = sum_i a[i*n + j], a is [m x n]
void col_sum(const double* a, std::size_t m, std::size_t n, double* out);

// Scalar reference implementations (always available; used directly by the
// equivalence tests and as the dispatch fallback).
namespace ref {
void kde_density(const double* smp, std::size_t n, double h, const double* pts,
                 std::size_t m, double* out);
void kde_density_grad(const double* smp, std::size_t n, double h,
                      const double* pts, const double* up, std::size_t m,
                      double* grad);
void gemm(const double* a, const double* b, double* c, std::size_t m,
          std::size_t k, std::size_t n);
void gemm_at_b(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
void gemm_a_bt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sq_diff_sum(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void col_sum(const double* a, std::size_t m, std::size_t n, double* out);
}  // namespace ref

#if defined(__x86_64__) || defined(_M_X64)
#define OAD_X86_64 1
namespace avx2 {
void kde_density(const double* smp, std::size_t n, double h, const double* pts,
                 std::size_t m, double* out);
void kde_density_grad(const double* smp, std::size_t n, double h,
                      const double* pts, const double* up, std::size_t m,
                      double* grad);
void gemm(const double* a, const double* b, double* c, std::size_t m,
          std::size_t k, std::size_t n);
void gemm_at_b(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
void gemm_a_bt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sq_diff_sum(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void col_sum(const double* a, std::size_t m, std::size_t n, double* out);
// exp on 4 lanes, exposed for accuracy tests.
void exp4(const double* x, double* out);
}  // namespace avx2
#endif

}  // namespace oad::simd
