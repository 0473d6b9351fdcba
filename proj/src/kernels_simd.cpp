// SPDX-License-Identifier: Apache-2.0
//
// SIMD kernel variants on std::experimental::simd. This translation unit is
// compiled with -mavx2 on x86-64 (native_simd<float> = 8 lanes) and with the
// default target elsewhere (NEON lanes on aarch64), so nothing here may be
// inlined into other translation units. Dispatch guarantees these entry
// points only run on CPUs that support the compiled target.
//
// FMA contraction is disabled for this file so the per-element arithmetic
// matches the scalar reference bit-for-bit; only reduction order differs
// (lane-parallel accumulators plus a scalar tail).

#include <cstddef>
#include <experimental/simd>

namespace stdx = std::experimental;

namespace gha::kernels::simd {

namespace {

template <class T>
using vec = stdx::native_simd<T>;

template <class T>
void axpy_impl(std::size_t n, T alpha, const T* x, T* y) {
  const std::size_t w = vec<T>::size();
  const vec<T> va(alpha);
  std::size_t i = 0;
  for (; i + w <= n; i += w) {
    vec<T> vx(&x[i], stdx::element_aligned);
    vec<T> vy(&y[i], stdx::element_aligned);
    vy += va * vx;
    vy.copy_to(&y[i], stdx::element_aligned);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
T dot_impl(std::size_t n, const T* a, const T* b) {
  const std::size_t w = vec<T>::size();
  vec<T> acc(T(0));
  std::size_t i = 0;
  for (; i + w <= n; i += w) {
    vec<T> va(&a[i], stdx::element_aligned);
    vec<T> vb(&b[i], stdx::element_aligned);
    acc += va * vb;
  }
  T r = stdx::reduce(acc);
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

template <class T, class Op>
void binary_impl(std::size_t n, const T* a, const T* b, T* out, Op op) {
  const std::size_t w = vec<T>::size();
  std::size_t i = 0;
  for (; i + w <= n; i += w) {
    vec<T> va(&a[i], stdx::element_aligned);
    vec<T> vb(&b[i], stdx::element_aligned);
    vec<T> vo = op(va, vb);
    vo.copy_to(&out[i], stdx::element_aligned);
  }
  for (; i < n; ++i) out[i] = op(a[i], b[i]);
}

template <class T>
void vmuladd_impl(std::size_t n, const T* a, const T* b, T* out) {
  const std::size_t w = vec<T>::size();
  std::size_t i = 0;
  for (; i + w <= n; i += w) {
    vec<T> va(&a[i], stdx::element_aligned);
    vec<T> vb(&b[i], stdx::element_aligned);
    vec<T> vo(&out[i], stdx::element_aligned);
    vo += va * vb;
    vo.copy_to(&out[i], stdx::element_aligned);
  }
  for (; i < n; ++i) out[i] += a[i] * b[i];
}

template <class T>
void vscale_impl(std::size_t n, T alpha, T* x) {
  const std::size_t w = vec<T>::size();
  const vec<T> va(alpha);
  std::size_t i = 0;
  for (; i + w <= n; i += w) {
    vec<T> vx(&x[i], stdx::element_aligned);
    vx *= va;
    vx.copy_to(&x[i], stdx::element_aligned);
  }
  for (; i < n; ++i) x[i] *= alpha;
}

template <class T>
T vsum_impl(std::size_t n, const T* a) {
  const std::size_t w = vec<T>::size();
  vec<T> acc(T(0));
  std::size_t i = 0;
  for (; i + w <= n; i += w) {
    vec<T> va(&a[i], stdx::element_aligned);
    acc += va;
  }
  T r = stdx::reduce(acc);
  for (; i < n; ++i) r += a[i];
  return r;
}

template <class T>
T vmax_impl(std::size_t n, const T* a) {
  const std::size_t w = vec<T>::size();
  T r = a[0];
  std::size_t i = 0;
  if (n >= w) {
    vec<T> acc(&a[0], stdx::element_aligned);
    for (i = w; i + w <= n; i += w) {
      vec<T> va(&a[i], stdx::element_aligned);
      acc = stdx::max(acc, va);
    }
    r = stdx::hmax(acc);
  }
  for (; i < n; ++i)
    if (a[i] > r) r = a[i];
  return r;
}

}  // namespace

void axpy(std::size_t n, float alpha, const float* x, float* y) { axpy_impl(n, alpha, x, y); }
void axpy(std::size_t n, double alpha, const double* x, double* y) { axpy_impl(n, alpha, x, y); }
float dot(std::size_t n, const float* a, const float* b) { return dot_impl(n, a, b); }
double dot(std::size_t n, const double* a, const double* b) { return dot_impl(n, a, b); }
void vadd(std::size_t n, const float* a, const float* b, float* out) {
  binary_impl(n, a, b, out, [](auto x, auto y) { return x + y; });
}
void vadd(std::size_t n, const double* a, const double* b, double* out) {
  binary_impl(n, a, b, out, [](auto x, auto y) { return x + y; });
}
void vsub(std::size_t n, const float* a, const float* b, float* out) {
  binary_impl(n, a, b, out, [](auto x, auto y) { return x - y; });
}
void vsub(std::size_t n, const double* a, const double* b, double* out) {
  binary_impl(n, a, b, out, [](auto x, auto y) { return x - y; });
}
void vmul(std::size_t n, const float* a, const float* b, float* out) {
  binary_impl(n, a, b, out, [](auto x, auto y) { return x * y; });
}
void vmul(std::size_t n, const double* a, const double* b, double* out) {
  binary_impl(n, a, b, out, [](auto x, auto y) { return x * y; });
}
void vmuladd(std::size_t n, const float* a, const float* b, float* out) { vmuladd_impl(n, a, b, out); }
void vmuladd(std::size_t n, const double* a, const double* b, double* out) { vmuladd_impl(n, a, b, out); }
void vscale(std::size_t n, float alpha, float* x) { vscale_impl(n, alpha, x); }
void vscale(std::size_t n, double alpha, double* x) { vscale_impl(n, alpha, x); }
float vsum(std::size_t n, const float* a) { return vsum_impl(n, a); }
double vsum(std::size_t n, const double* a) { return vsum_impl(n, a); }
float vmax(std::size_t n, const float* a) { return vmax_impl(n, a); }
double vmax(std::size_t n, const double* a) { return vmax_impl(n, a); }

}  // namespace gha::kernels::simd
