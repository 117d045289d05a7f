#include "dinsys/kernels.hpp"

#include <cmath>

#if defined(__x86_64__) || defined(_M_X64)
#define DINSYS_X86 1
#include <immintrin.h>
#else
#define DINSYS_X86 0
#endif

namespace dinsys::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double weighted_sq_sum_scalar(const double* w, const double* x,
                              std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * x[i];
  return s;
}

#if DINSYS_X86

__attribute__((target("avx2,fma"))) double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

__attribute__((target("avx2,fma"))) double dot_avx2(const double* a,
                                                    const double* b,
                                                    std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

__attribute__((target("avx2,fma"))) void axpy_avx2(double alpha,
                                                   const double* x, double* y,
                                                   std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // Separate multiply and add: the scalar reference rounds twice, and the
    // two variants must agree bitwise.
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

__attribute__((target("avx2,fma"))) double weighted_sq_sum_avx2(
    const double* w, const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(vx, vx), _mm256_loadu_pd(w + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * x[i] * x[i];
  return s;
}

#endif  // DINSYS_X86

struct Dispatch {
  Isa isa;
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*wsq)(const double*, const double*, std::size_t);
};

constexpr Dispatch kScalar{Isa::scalar, dot_scalar, axpy_scalar,
                           weighted_sq_sum_scalar};

#if DINSYS_X86
constexpr Dispatch kAvx2{Isa::avx2, dot_avx2, axpy_avx2,
                         weighted_sq_sum_avx2};
#endif

Dispatch pick_default() {
#if DINSYS_X86
  if (cpu_has_avx2()) return kAvx2;
#endif
  return kScalar;
}

Dispatch g_dispatch = pick_default();

}  // namespace

bool cpu_has_avx2() {
#if DINSYS_X86
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() { return g_dispatch.isa; }

void force_isa(Isa isa) {
#if DINSYS_X86
  if (isa == Isa::avx2 && cpu_has_avx2()) {
    g_dispatch = kAvx2;
    return;
  }
#endif
  (void)isa;
  g_dispatch = kScalar;
}

double dot(const double* a, const double* b, std::size_t n) {
  return g_dispatch.dot(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  g_dispatch.axpy(alpha, x, y, n);
}

double weighted_sq_sum(const double* w, const double* x, std::size_t n) {
  return g_dispatch.wsq(w, x, n);
}

double weighted_abs_pow_sum(const double* w, const double* x, double p,
                            std::size_t n) {
  if (p == 2.0) return g_dispatch.wsq(w, x, n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * std::pow(std::abs(x[i]), p);
  return s;
}

}  // namespace dinsys::kernels
