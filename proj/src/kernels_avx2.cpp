// AVX2/FMA variants of the hot kernels. Compiled with -mavx2 -mfma; only
// reached after the runtime CPUID check in kernels.cpp.

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace owf::kernels::detail {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

const __m256d kAbsMask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffll));

}  // namespace

double dot_avx2(const double* a, const double* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_l2_avx2(const double* a, const double* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double weighted_l1_avx2(const double* a, const double* b, const double* w, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    d = _mm256_and_pd(d, kAbsMask);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * std::fabs(a[i] - b[i]);
  return s;
}

double centered_dot_avx2(const double* a, double mean_a, const double* b, double mean_b,
                         size_t n) {
  __m256d ma = _mm256_set1_pd(mean_a);
  __m256d mb = _mm256_set1_pd(mean_b);
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d da = _mm256_sub_pd(_mm256_loadu_pd(a + i), ma);
    __m256d db = _mm256_sub_pd(_mm256_loadu_pd(b + i), mb);
    acc = _mm256_fmadd_pd(da, db, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += (a[i] - mean_a) * (b[i] - mean_b);
  return s;
}

void sum_sumsq_avx2(const double* a, size_t n, double* sum, double* sumsq) {
  __m256d acc = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(a + i);
    acc = _mm256_add_pd(acc, v);
    acc2 = _mm256_fmadd_pd(v, v, acc2);
  }
  double s = hsum(acc);
  double s2 = hsum(acc2);
  for (; i < n; ++i) {
    s += a[i];
    s2 += a[i] * a[i];
  }
  *sum = s;
  *sumsq = s2;
}

}  // namespace owf::kernels::detail
