#pragma once

#include <cstddef>
#include <string>

// Data-parallel inner loops shared by the distance and feature code. Each
// primitive has a scalar reference implementation and, on x86-64, an AVX2
// variant; the active backend is chosen once at startup from CPUID and can be
// forced (config key `simd`, or tests). SIMD results may differ from scalar
// in the last bits (different summation order); equivalence is tested to
// tight tolerance, and a single process always uses one backend, so outputs
// stay deterministic for a fixed configuration.

namespace owf::kernels {

enum class Backend { Scalar, Avx2 };

bool avx2_available();
Backend active_backend();

/// Force a backend. Throws ConfigError if the requested backend is not
/// supported on this machine.
void set_backend(Backend b);

/// Parse "auto" | "scalar" | "avx2".
void set_backend(const std::string& name);

const char* backend_name(Backend b);

/// sum_i a[i] * b[i]
double dot(const double* a, const double* b, size_t n);

/// sum_i (a[i] - b[i])^2
double squared_l2(const double* a, const double* b, size_t n);

/// sum_i w[i] * |a[i] - b[i]|
double weighted_l1(const double* a, const double* b, const double* w, size_t n);

/// sum_i (a[i] - mean_a) * (b[i] - mean_b)
double centered_dot(const double* a, double mean_a, const double* b, double mean_b, size_t n);

/// Accumulate sum and sum of squares in one pass.
void sum_sumsq(const double* a, size_t n, double* sum, double* sumsq);

namespace detail {
double dot_scalar(const double* a, const double* b, size_t n);
double squared_l2_scalar(const double* a, const double* b, size_t n);
double weighted_l1_scalar(const double* a, const double* b, const double* w, size_t n);
double centered_dot_scalar(const double* a, double mean_a, const double* b, double mean_b,
                           size_t n);
void sum_sumsq_scalar(const double* a, size_t n, double* sum, double* sumsq);

#if defined(OWF_HAVE_AVX2_BUILD)
double dot_avx2(const double* a, const double* b, size_t n);
double squared_l2_avx2(const double* a, const double* b, size_t n);
double weighted_l1_avx2(const double* a, const double* b, const double* w, size_t n);
double centered_dot_avx2(const double* a, double mean_a, const double* b, double mean_b, size_t n);
void sum_sumsq_avx2(const double* a, size_t n, double* sum, double* sumsq);
#endif
}  // namespace detail

}  // namespace owf::kernels
