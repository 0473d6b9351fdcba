// SPDX-License-Identifier: Apache-2.0

#include "gha/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace gha::kernels {

namespace scalar {
void axpy(std::size_t, float, const float*, float*);
void axpy(std::size_t, double, const double*, double*);
float dot(std::size_t, const float*, const float*);
double dot(std::size_t, const double*, const double*);
void vadd(std::size_t, const float*, const float*, float*);
void vadd(std::size_t, const double*, const double*, double*);
void vsub(std::size_t, const float*, const float*, float*);
void vsub(std::size_t, const double*, const double*, double*);
void vmul(std::size_t, const float*, const float*, float*);
void vmul(std::size_t, const double*, const double*, double*);
void vmuladd(std::size_t, const float*, const float*, float*);
void vmuladd(std::size_t, const double*, const double*, double*);
void vscale(std::size_t, float, float*);
void vscale(std::size_t, double, double*);
float vsum(std::size_t, const float*);
double vsum(std::size_t, const double*);
float vmax(std::size_t, const float*);
double vmax(std::size_t, const double*);
}  // namespace scalar

namespace simd {
void axpy(std::size_t, float, const float*, float*);
void axpy(std::size_t, double, const double*, double*);
float dot(std::size_t, const float*, const float*);
double dot(std::size_t, const double*, const double*);
void vadd(std::size_t, const float*, const float*, float*);
void vadd(std::size_t, const double*, const double*, double*);
void vsub(std::size_t, const float*, const float*, float*);
void vsub(std::size_t, const double*, const double*, double*);
void vmul(std::size_t, const float*, const float*, float*);
void vmul(std::size_t, const double*, const double*, double*);
void vmuladd(std::size_t, const float*, const float*, float*);
void vmuladd(std::size_t, const double*, const double*, double*);
void vscale(std::size_t, float, float*);
void vscale(std::size_t, double, double*);
float vsum(std::size_t, const float*);
double vsum(std::size_t, const double*);
float vmax(std::size_t, const float*);
double vmax(std::size_t, const double*);
}  // namespace simd

namespace {

bool detect_simd() {
#if defined(__x86_64__) || defined(_M_X64)
  // The SIMD translation unit is compiled with -mavx2 on x86-64.
  return __builtin_cpu_supports("avx2");
#elif defined(__aarch64__)
  return true;  // NEON is baseline on aarch64
#else
  return false;
#endif
}

Backend initial_backend() {
  const char* env = std::getenv("GHA_KERNELS");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "simd") == 0) {
      if (!detect_simd()) throw std::runtime_error("GHA_KERNELS=simd: CPU lacks the compiled SIMD target");
      return Backend::simd;
    }
    // anything else (including "auto") falls through to detection
  }
  return detect_simd() ? Backend::simd : Backend::scalar;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> slot{initial_backend()};
  return slot;
}

}  // namespace

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (b == Backend::simd && !detect_simd())
    throw std::runtime_error("set_backend: CPU lacks the compiled SIMD target");
  backend_slot().store(b, std::memory_order_relaxed);
}

bool simd_supported() { return detect_simd(); }

const char* backend_name(Backend b) { return b == Backend::simd ? "simd" : "scalar"; }

#define GHA_DISPATCH(fn, ...) \
  (active_backend() == Backend::simd ? simd::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))

void axpy(std::size_t n, float alpha, const float* x, float* y) { GHA_DISPATCH(axpy, n, alpha, x, y); }
void axpy(std::size_t n, double alpha, const double* x, double* y) { GHA_DISPATCH(axpy, n, alpha, x, y); }
float dot(std::size_t n, const float* a, const float* b) { return GHA_DISPATCH(dot, n, a, b); }
double dot(std::size_t n, const double* a, const double* b) { return GHA_DISPATCH(dot, n, a, b); }
void vadd(std::size_t n, const float* a, const float* b, float* out) { GHA_DISPATCH(vadd, n, a, b, out); }
void vadd(std::size_t n, const double* a, const double* b, double* out) { GHA_DISPATCH(vadd, n, a, b, out); }
void vsub(std::size_t n, const float* a, const float* b, float* out) { GHA_DISPATCH(vsub, n, a, b, out); }
void vsub(std::size_t n, const double* a, const double* b, double* out) { GHA_DISPATCH(vsub, n, a, b, out); }
void vmul(std::size_t n, const float* a, const float* b, float* out) { GHA_DISPATCH(vmul, n, a, b, out); }
void vmul(std::size_t n, const double* a, const double* b, double* out) { GHA_DISPATCH(vmul, n, a, b, out); }
void vmuladd(std::size_t n, const float* a, const float* b, float* out) { GHA_DISPATCH(vmuladd, n, a, b, out); }
void vmuladd(std::size_t n, const double* a, const double* b, double* out) { GHA_DISPATCH(vmuladd, n, a, b, out); }
void vscale(std::size_t n, float alpha, float* x) { GHA_DISPATCH(vscale, n, alpha, x); }
void vscale(std::size_t n, double alpha, double* x) { GHA_DISPATCH(vscale, n, alpha, x); }
float vsum(std::size_t n, const float* a) { return GHA_DISPATCH(vsum, n, a); }
double vsum(std::size_t n, const double* a) { return GHA_DISPATCH(vsum, n, a); }
float vmax(std::size_t n, const float* a) { return GHA_DISPATCH(vmax, n, a); }
double vmax(std::size_t n, const double* a) { return GHA_DISPATCH(vmax, n, a); }

#undef GHA_DISPATCH

namespace {

// The gemm family is written once over the dispatched vector kernels.
// gemm_nn/gemm_tn vectorize along the output row (axpy), gemm_nt reduces
// along the contraction (dot); per output element the accumulation order
// is a fixed left-to-right walk over k either way.

template <class T>
void gemm_nn_impl(std::size_t m, std::size_t k, std::size_t n,
                  const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l)
      axpy(n, a[i * k + l], b + l * n, c + i * n);
}

template <class T>
void gemm_nt_impl(std::size_t m, std::size_t k, std::size_t n,
                  const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      c[i * n + j] += dot(k, a + i * k, b + j * k);
}

template <class T>
void gemm_tn_impl(std::size_t m, std::size_t k, std::size_t n,
                  const T* a, const T* b, T* c) {
  for (std::size_t l = 0; l < k; ++l)
    for (std::size_t i = 0; i < m; ++i)
      axpy(n, a[l * m + i], b + l * n, c + i * n);
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c) {
  gemm_nn_impl(m, k, n, a, b, c);
}
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  gemm_nn_impl(m, k, n, a, b, c);
}
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c) {
  gemm_nt_impl(m, k, n, a, b, c);
}
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  gemm_nt_impl(m, k, n, a, b, c);
}
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const float* a, const float* b, float* c) {
  gemm_tn_impl(m, k, n, a, b, c);
}
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
  gemm_tn_impl(m, k, n, a, b, c);
}

}  // namespace gha::kernels
