// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_KERNELS_HPP_
#define GHA_KERNELS_HPP_

#include <cstddef>

// Data-parallel inner loops behind the tensor library. Every kernel exists
// twice: a scalar reference implementation and a SIMD variant built on
// std::experimental::simd (AVX2 on x86-64, NEON on aarch64). The backend is
// chosen once at runtime (CPU probe, overridable via set_backend or the
// GHA_KERNELS environment variable); both variants are equivalence-tested
// against each other.
//
// Conventions: row-major storage. For the gemm family, m and n are output
// dimensions and k is the contraction length:
//   gemm_nn: C[m,n] += A[m,k] * B[k,n]
//   gemm_nt: C[m,n] += A[m,k] * B[n,k]^T
//   gemm_tn: C[m,n] += A[k,m]^T * B[k,n]
// Per output element the contraction order is fixed and independent of m,
// so row i of the output never depends on how many rows follow it. The
// causal-decoder prefix-consistency guarantee relies on this.

namespace gha::kernels {

enum class Backend { scalar, simd };

// Active backend. Defaults to the SIMD variant when the CPU supports it;
// GHA_KERNELS=scalar|simd|auto overrides.
Backend active_backend();
void set_backend(Backend b);
bool simd_supported();
const char* backend_name(Backend b);

// y += alpha * x
void axpy(std::size_t n, float alpha, const float* x, float* y);
void axpy(std::size_t n, double alpha, const double* x, double* y);

// sum_i a[i] * b[i]
float dot(std::size_t n, const float* a, const float* b);
double dot(std::size_t n, const double* a, const double* b);

// out = a + b / a - b / a * b, elementwise
void vadd(std::size_t n, const float* a, const float* b, float* out);
void vadd(std::size_t n, const double* a, const double* b, double* out);
void vsub(std::size_t n, const float* a, const float* b, float* out);
void vsub(std::size_t n, const double* a, const double* b, double* out);
void vmul(std::size_t n, const float* a, const float* b, float* out);
void vmul(std::size_t n, const double* a, const double* b, double* out);

// out += a * b, elementwise
void vmuladd(std::size_t n, const float* a, const float* b, float* out);
void vmuladd(std::size_t n, const double* a, const double* b, double* out);

// x *= alpha
void vscale(std::size_t n, float alpha, float* x);
void vscale(std::size_t n, double alpha, double* x);

float vsum(std::size_t n, const float* a);
double vsum(std::size_t n, const double* a);

// max over a[0..n); n >= 1
float vmax(std::size_t n, const float* a);
double vmax(std::size_t n, const double* a);

void gemm_nn(std::size_t m, std::size_t k, std::size_t n,
             const float* a, const float* b, float* c);
void gemm_nn(std::size_t m, std::size_t k, std::size_t n,
             const double* a, const double* b, double* c);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n,
             const float* a, const float* b, float* c);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n,
             const double* a, const double* b, double* c);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n,
             const float* a, const float* b, float* c);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n,
             const double* a, const double* b, double* c);

}  // namespace gha::kernels

#endif  // GHA_KERNELS_HPP_
