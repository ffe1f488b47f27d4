#include "owf/kernels.hpp"

#include <cmath>

#include "owf/common.hpp"

namespace owf::kernels {

namespace detail {

double dot_scalar(const double* a, const double* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_l2_scalar(const double* a, const double* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double weighted_l1_scalar(const double* a, const double* b, const double* w, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += w[i] * std::fabs(a[i] - b[i]);
  return s;
}

double centered_dot_scalar(const double* a, double mean_a, const double* b, double mean_b,
                           size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += (a[i] - mean_a) * (b[i] - mean_b);
  return s;
}

void sum_sumsq_scalar(const double* a, size_t n, double* sum, double* sumsq) {
  double s = 0.0, s2 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    s += a[i];
    s2 += a[i] * a[i];
  }
  *sum = s;
  *sumsq = s2;
}

}  // namespace detail

namespace {

struct Dispatch {
  double (*dot)(const double*, const double*, size_t);
  double (*squared_l2)(const double*, const double*, size_t);
  double (*weighted_l1)(const double*, const double*, const double*, size_t);
  double (*centered_dot)(const double*, double, const double*, double, size_t);
  void (*sum_sumsq)(const double*, size_t, double*, double*);
};

constexpr Dispatch kScalar = {
    detail::dot_scalar,         detail::squared_l2_scalar, detail::weighted_l1_scalar,
    detail::centered_dot_scalar, detail::sum_sumsq_scalar,
};

#if defined(OWF_HAVE_AVX2_BUILD)
constexpr Dispatch kAvx2 = {
    detail::dot_avx2,         detail::squared_l2_avx2, detail::weighted_l1_avx2,
    detail::centered_dot_avx2, detail::sum_sumsq_avx2,
};
#endif

Backend g_backend = avx2_available() ? Backend::Avx2 : Backend::Scalar;
const Dispatch* g_dispatch =
#if defined(OWF_HAVE_AVX2_BUILD)
    avx2_available() ? &kAvx2 : &kScalar;
#else
    &kScalar;
#endif

}  // namespace

bool avx2_available() {
#if defined(OWF_HAVE_AVX2_BUILD)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
  if (b == Backend::Avx2 && !avx2_available())
    throw ConfigError("simd backend avx2 requested but not available on this CPU/build");
  g_backend = b;
#if defined(OWF_HAVE_AVX2_BUILD)
  g_dispatch = b == Backend::Avx2 ? &kAvx2 : &kScalar;
#else
  g_dispatch = &kScalar;
#endif
}

void set_backend(const std::string& name) {
  if (name == "auto")
    set_backend(avx2_available() ? Backend::Avx2 : Backend::Scalar);
  else if (name == "scalar")
    set_backend(Backend::Scalar);
  else if (name == "avx2")
    set_backend(Backend::Avx2);
  else
    throw ConfigError("unknown simd backend: " + name);
}

const char* backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

double dot(const double* a, const double* b, size_t n) { return g_dispatch->dot(a, b, n); }

double squared_l2(const double* a, const double* b, size_t n) {
  return g_dispatch->squared_l2(a, b, n);
}

double weighted_l1(const double* a, const double* b, const double* w, size_t n) {
  return g_dispatch->weighted_l1(a, b, w, n);
}

double centered_dot(const double* a, double mean_a, const double* b, double mean_b, size_t n) {
  return g_dispatch->centered_dot(a, mean_a, b, mean_b, n);
}

void sum_sumsq(const double* a, size_t n, double* sum, double* sumsq) {
  g_dispatch->sum_sumsq(a, n, sum, sumsq);
}

}  // namespace owf::kernels
