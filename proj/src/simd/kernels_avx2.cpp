// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma; only invoked after
// runtime CPUID dispatch confirms support. exp has no hardware instruction, so
// a Cephes-style Pade approximation is evaluated in-register (~1 ulp); loop
// tails reuse the same polynomial in scalar form so a kernel's result does not
// depend on how the trip count splits.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "oad/simd/kernels.hpp"

namespace oad::simd::avx2 {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399;
constexpr double kLog2E = 1.4426950408889634073599;
constexpr double kExpC1 = 6.93145751953125e-1;
constexpr double kExpC2 = 1.42860682030941723212e-6;
constexpr double kExpP0 = 1.26177193074810590878e-4;
constexpr double kExpP1 = 3.02994407707441961300e-2;
constexpr double kExpP2 = 9.99999999999999999910e-1;
constexpr double kExpQ0 = 3.00198505138664455042e-6;
constexpr double kExpQ1 = 2.52448340349684104192e-3;
constexpr double kExpQ2 = 2.27265548208155028766e-1;
constexpr double kExpQ3 = 2.00000000000000000005e0;
// exp(x) for x < -708 lands in the denormal range where the 2^n bit trick
// breaks down; flush to zero, matching the scalar reference cutoff.
constexpr double kExpUnderflow = -708.0;

inline __m256d exp4_pd(__m256d x) {
  const __m256d underflow =
      _mm256_cmp_pd(x, _mm256_set1_pd(kExpUnderflow), _CMP_LT_OQ);

  const __m256d n =
      _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2E)),
                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  x = _mm256_fnmadd_pd(n, _mm256_set1_pd(kExpC1), x);
  x = _mm256_fnmadd_pd(n, _mm256_set1_pd(kExpC2), x);

  const __m256d xx = _mm256_mul_pd(x, x);
  __m256d px = _mm256_set1_pd(kExpP0);
  px = _mm256_fmadd_pd(px, xx, _mm256_set1_pd(kExpP1));
  px = _mm256_fmadd_pd(px, xx, _mm256_set1_pd(kExpP2));
  px = _mm256_mul_pd(px, x);
  __m256d qx = _mm256_set1_pd(kExpQ0);
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(kExpQ1));
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(kExpQ2));
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(kExpQ3));

  const __m256d ratio = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  __m256d e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), ratio,
                              _mm256_set1_pd(1.0));

  // e * 2^n via exponent-field construction; n is within [-1021, 1024] here.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  const __m256i n64 = _mm256_cvtepi32_epi64(n32);
  const __m256i pow2 = _mm256_slli_epi64(
      _mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  e = _mm256_mul_pd(e, _mm256_castsi256_pd(pow2));

  return _mm256_andnot_pd(underflow, e);
}

// Scalar twin of exp4_pd for loop tails.
inline double exp_cephes(double x) {
  if (x < kExpUnderflow) return 0.0;
  const double n = std::nearbyint(x * kLog2E);
  x = std::fma(-n, kExpC1, x);
  x = std::fma(-n, kExpC2, x);
  const double xx = x * x;
  const double px = x * std::fma(std::fma(kExpP0, xx, kExpP1), xx, kExpP2);
  const double qx =
      std::fma(std::fma(std::fma(kExpQ0, xx, kExpQ1), xx, kExpQ2), xx, kExpQ3);
  const double e = 1.0 + 2.0 * px / (qx - px);
  return std::ldexp(e, static_cast<int>(n));
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  const __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

}  // namespace

void exp4(const double* x, double* out) {
  _mm256_storeu_pd(out, exp4_pd(_mm256_loadu_pd(x)));
}

void kde_density(const double* smp, std::size_t n, double h, const double* pts,
                 std::size_t m, double* out) {
  const double inv_h = 1.0 / h;
  const double scale = kInvSqrt2Pi / (static_cast<double>(n) * h);
  const __m256d vinv_h = _mm256_set1_pd(inv_h);
  const __m256d vneg_half = _mm256_set1_pd(-0.5);
  for (std::size_t j = 0; j < m; ++j) {
    const __m256d vp = _mm256_set1_pd(pts[j]);
    __m256d vacc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      const __m256d s = _mm256_loadu_pd(smp + i);
      const __m256d t = _mm256_mul_pd(_mm256_sub_pd(vp, s), vinv_h);
      const __m256d x = _mm256_mul_pd(_mm256_mul_pd(vneg_half, t), t);
      vacc = _mm256_add_pd(vacc, exp4_pd(x));
    }
    double acc = hsum(vacc);
    for (; i < n; ++i) {
      const double t = (pts[j] - smp[i]) * inv_h;
      acc += exp_cephes(-0.5 * t * t);
    }
    out[j] = acc * scale;
  }
}

void kde_density_grad(const double* smp, std::size_t n, double h,
                      const double* pts, const double* up, std::size_t m,
                      double* grad) {
  const double inv_h = 1.0 / h;
  const double scale = kInvSqrt2Pi / (static_cast<double>(n) * h * h);
  const __m256d vinv_h = _mm256_set1_pd(inv_h);
  const __m256d vneg_half = _mm256_set1_pd(-0.5);
  const __m256d vscale = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d s = _mm256_loadu_pd(smp + i);
    __m256d vacc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < m; ++j) {
      const __m256d t =
          _mm256_mul_pd(_mm256_sub_pd(_mm256_set1_pd(pts[j]), s), vinv_h);
      const __m256d e =
          exp4_pd(_mm256_mul_pd(_mm256_mul_pd(vneg_half, t), t));
      vacc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_set1_pd(up[j]), t), e, vacc);
    }
    _mm256_storeu_pd(grad + i, _mm256_mul_pd(vacc, vscale));
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double t = (pts[j] - smp[i]) * inv_h;
      acc += up[j] * t * exp_cephes(-0.5 * t * t);
    }
    grad[i] = acc * scale;
  }
}

void gemm(const double* a, const double* b, double* c, std::size_t m,
          std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double ail = a[i * k + l];
      const __m256d va = _mm256_set1_pd(ail);
      const double* brow = b + l * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        const __m256d vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j),
                                           _mm256_loadu_pd(crow + j));
        _mm256_storeu_pd(crow + j, vc);
      }
      for (; j < n; ++j) crow[j] += ail * brow[j];
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
      const __m256d va = _mm256_set1_pd(ari);
      double* crow = c + i * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        const __m256d vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j),
                                           _mm256_loadu_pd(crow + j));
        _mm256_storeu_pd(crow + j, vc);
      }
      for (; j < n; ++j) crow[j] += ari * brow[j];
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
  __m256d vacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    vacc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                           vacc);
  }
  double acc = hsum(vacc);
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  __m256d vacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vacc = _mm256_add_pd(vacc, _mm256_loadu_pd(a + i));
  double acc = hsum(vacc);
  for (; i < n; ++i) acc += a[i];
  return acc;
}

double sq_diff_sum(const double* a, const double* b, std::size_t n) {
  __m256d vacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d =
        _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    vacc = _mm256_fmadd_pd(d, d, vacc);
  }
  double acc = hsum(vacc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vy =
        _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void col_sum(const double* a, std::size_t m, std::size_t n, double* out) {
  for (std::size_t j = 0; j < n; ++j) out[j] = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double* arow = a + r * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const __m256d vo =
          _mm256_add_pd(_mm256_loadu_pd(out + j), _mm256_loadu_pd(arow + j));
      _mm256_storeu_pd(out + j, vo);
    }
    for (; j < n; ++j) out[j] += arow[j];
  }
}

}  // namespace oad::simd::avx2

#endif  // x86-64
