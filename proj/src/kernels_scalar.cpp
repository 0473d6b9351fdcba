// SPDX-License-Identifier: Apache-2.0
//
// Scalar reference kernels. These define the semantics the SIMD variants are
// tested against; keep them as plain loops.

#include <cstddef>

namespace gha::kernels::scalar {

namespace {

template <class T>
void axpy_impl(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
T dot_impl(std::size_t n, const T* a, const T* b) {
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <class T>
void vadd_impl(std::size_t n, const T* a, const T* b, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <class T>
void vsub_impl(std::size_t n, const T* a, const T* b, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <class T>
void vmul_impl(std::size_t n, const T* a, const T* b, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <class T>
void vmuladd_impl(std::size_t n, const T* a, const T* b, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

template <class T>
void vscale_impl(std::size_t n, T alpha, T* x) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

template <class T>
T vsum_impl(std::size_t n, const T* a) {
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

template <class T>
T vmax_impl(std::size_t n, const T* a) {
  T m = a[0];
  for (std::size_t i = 1; i < n; ++i)
    if (a[i] > m) m = a[i];
  return m;
}

}  // namespace

void axpy(std::size_t n, float alpha, const float* x, float* y) { axpy_impl(n, alpha, x, y); }
void axpy(std::size_t n, double alpha, const double* x, double* y) { axpy_impl(n, alpha, x, y); }
float dot(std::size_t n, const float* a, const float* b) { return dot_impl(n, a, b); }
double dot(std::size_t n, const double* a, const double* b) { return dot_impl(n, a, b); }
void vadd(std::size_t n, const float* a, const float* b, float* out) { vadd_impl(n, a, b, out); }
void vadd(std::size_t n, const double* a, const double* b, double* out) { vadd_impl(n, a, b, out); }
void vsub(std::size_t n, const float* a, const float* b, float* out) { vsub_impl(n, a, b, out); }
void vsub(std::size_t n, const double* a, const double* b, double* out) { vsub_impl(n, a, b, out); }
void vmul(std::size_t n, const float* a, const float* b, float* out) { vmul_impl(n, a, b, out); }
void vmul(std::size_t n, const double* a, const double* b, double* out) { vmul_impl(n, a, b, out); }
void vmuladd(std::size_t n, const float* a, const float* b, float* out) { vmuladd_impl(n, a, b, out); }
void vmuladd(std::size_t n, const double* a, const double* b, double* out) { vmuladd_impl(n, a, b, out); }
void vscale(std::size_t n, float alpha, float* x) { vscale_impl(n, alpha, x); }
void vscale(std::size_t n, double alpha, double* x) { vscale_impl(n, alpha, x); }
float vsum(std::size_t n, const float* a) { return vsum_impl(n, a); }
double vsum(std::size_t n, const double* a) { return vsum_impl(n, a); }
float vmax(std::size_t n, const float* a) { return vmax_impl(n, a); }
double vmax(std::size_t n, const double* a) { return vmax_impl(n, a); }

}  // namespace gha::kernels::scalar
