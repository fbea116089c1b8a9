#include "esv/kernels.hpp"

#include <cstdlib>
#include <cstring>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define ESV_KERNELS_X86 1
#endif
#if defined(__aarch64__)
#include <arm_neon.h>
#define ESV_KERNELS_NEON 1
#endif

namespace esv::kern {
namespace {

double dot_scalar(const double* a, const double* b, size_t len) {
  double acc = 0.0;
  for (size_t i = 0; i < len; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, size_t len) {
  for (size_t i = 0; i < len; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double alpha, double* x, size_t len) {
  for (size_t i = 0; i < len; ++i) x[i] *= alpha;
}

void relu_scalar(double* x, size_t len) {
  for (size_t i = 0; i < len; ++i)
    if (x[i] < 0.0) x[i] = 0.0;
}

constexpr Backend kScalar{"scalar", dot_scalar, axpy_scalar, scal_scalar, relu_scalar};

#ifdef ESV_KERNELS_X86

__attribute__((target("avx2,fma"))) double dot_avx2(const double* a, const double* b,
                                                    size_t len) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= len; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  acc0 = _mm256_add_pd(acc0, acc1);
  __m128d lo = _mm256_castpd256_pd128(acc0);
  __m128d hi = _mm256_extractf128_pd(acc0, 1);
  lo = _mm_add_pd(lo, hi);
  double acc = _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
  for (; i < len; ++i) acc += a[i] * b[i];
  return acc;
}

__attribute__((target("avx2,fma"))) void axpy_avx2(double alpha, const double* x, double* y,
                                                   size_t len) {
  __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < len; ++i) y[i] += alpha * x[i];
}

__attribute__((target("avx2"))) void scal_avx2(double alpha, double* x, size_t len) {
  __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 4 <= len; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < len; ++i) x[i] *= alpha;
}

__attribute__((target("avx2"))) void relu_avx2(double* x, size_t len) {
  __m256d zero = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= len; i += 4)
    _mm256_storeu_pd(x + i, _mm256_max_pd(zero, _mm256_loadu_pd(x + i)));
  for (; i < len; ++i)
    if (x[i] < 0.0) x[i] = 0.0;
}

constexpr Backend kAvx2{"avx2", dot_avx2, axpy_avx2, scal_avx2, relu_avx2};

bool avx2_usable() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

#endif  // ESV_KERNELS_X86

#ifdef ESV_KERNELS_NEON

double dot_neon(const double* a, const double* b, size_t len) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  for (; i + 2 <= len; i += 2) acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < len; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_neon(double alpha, const double* x, double* y, size_t len) {
  float64x2_t va = vdupq_n_f64(alpha);
  size_t i = 0;
  for (; i + 2 <= len; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < len; ++i) y[i] += alpha * x[i];
}

void scal_neon(double alpha, double* x, size_t len) {
  float64x2_t va = vdupq_n_f64(alpha);
  size_t i = 0;
  for (; i + 2 <= len; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < len; ++i) x[i] *= alpha;
}

void relu_neon(double* x, size_t len) {
  float64x2_t zero = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 2 <= len; i += 2) vst1q_f64(x + i, vmaxq_f64(zero, vld1q_f64(x + i)));
  for (; i < len; ++i)
    if (x[i] < 0.0) x[i] = 0.0;
}

constexpr Backend kNeon{"neon", dot_neon, axpy_neon, scal_neon, relu_neon};

#endif  // ESV_KERNELS_NEON

const Backend& pick_backend() {
  const char* env = std::getenv("ESV_KERNELS");
  if (env && std::strcmp(env, "scalar") == 0) return kScalar;
#ifdef ESV_KERNELS_X86
  if (env && std::strcmp(env, "avx2") == 0 && avx2_usable()) return kAvx2;
  if ((!env || std::strcmp(env, "auto") == 0) && avx2_usable()) return kAvx2;
#endif
#ifdef ESV_KERNELS_NEON
  if (!env || std::strcmp(env, "auto") == 0 || std::strcmp(env, "neon") == 0) return kNeon;
#endif
  return kScalar;
}

}  // namespace

const Backend& scalar_backend() { return kScalar; }

const Backend& active_backend() {
  static const Backend& chosen = pick_backend();
  return chosen;
}

void gemv(const Backend& k, const double* w, size_t rows, size_t cols, const double* x,
          const double* b, double* y) {
  for (size_t r = 0; r < rows; ++r) {
    y[r] = k.dot(w + r * cols, x, cols);
    if (b) y[r] += b[r];
  }
}

}  // namespace esv::kern
