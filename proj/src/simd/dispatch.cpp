#include <cstdlib>
#include <cstring>

#include "oad/simd/kernels.hpp"

namespace oad::simd {

namespace {

IsaLevel detect() {
  const char* forced = std::getenv("OAD_SIMD");
  if (forced != nullptr) {
    if (std::strcmp(forced, "scalar") == 0) return IsaLevel::scalar;
#if defined(OAD_X86_64)
    if (std::strcmp(forced, "avx2") == 0) return IsaLevel::avx2;
#endif
  }
#if defined(OAD_X86_64)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return IsaLevel::avx2;
  }
#endif
  return IsaLevel::scalar;
}

}  // namespace

IsaLevel active_level() {
  static const IsaLevel level = detect();
  return level;
}

const char* level_name(IsaLevel level) {
  switch (level) {
    case IsaLevel::avx2:
      return "avx2";
    case IsaLevel::scalar:
      return "scalar";
  }
  return "unknown";
}

#if defined(OAD_X86_64)
#define OAD_DISPATCH(fn, ...)                    \
  if (active_level() == IsaLevel::avx2) {        \
    return avx2::fn(__VA_ARGS__);                \
  }                                              \
  return ref::fn(__VA_ARGS__)
#else
#define OAD_DISPATCH(fn, ...) return ref::fn(__VA_ARGS__)
#endif

void kde_density(const double* smp, std::size_t n, double h, const double* pts,
                 std::size_t m, double* out) {
  OAD_DISPATCH(kde_density, smp, n, h, pts, m, out);
}

void kde_density_grad(const double* smp, std::size_t n, double h,
                      const double* pts, const double* up, std::size_t m,
                      double* grad) {
  OAD_DISPATCH(kde_density_grad, smp, n, h, pts, up, m, grad);
}

void gemm(const double* a, const double* b, double* c, std::size_t m,
          std::size_t k, std::size_t n) {
  OAD_DISPATCH(gemm, a, b, c, m, k, n);
}

void gemm_at_b(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  OAD_DISPATCH(gemm_at_b, a, b, c, m, k, n);
}

void gemm_a_bt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  OAD_DISPATCH(gemm_a_bt, a, b, c, m, k, n);
}

double dot(const double* a, const double* b, std::size_t n) {
  OAD_DISPATCH(dot, a, b, n);
}

double sum(const double* a, std::size_t n) { OAD_DISPATCH(sum, a, n); }

double sq_diff_sum(const double* a, const double* b, std::size_t n) {
  OAD_DISPATCH(sq_diff_sum, a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  OAD_DISPATCH(axpy, alpha, x, y, n);
}

void col_sum(const double* a, std::size_t m, std::size_t n, double* out) {
  OAD_DISPATCH(col_sum, a, m, n, out);
}

#undef OAD_DISPATCH

}  // namespace oad::simd
