// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_OPS_HPP_
#define GHA_OPS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "gha/kernels.hpp"
#include "gha/rng.hpp"
#include "gha/tensor.hpp"

// Differentiable operations. Every op takes the tape as first argument; a
// null tape (or inputs that do not require grad) runs forward-only. All
// cross-position mixing in the model goes through causal_conv1d; every other
// op here treats rows independently, which is what makes prefix re-runs of
// the decoder bit-identical.

namespace gha::ag {

namespace detail {

template <class T>
bool want_grad(Tape<T>* tape, std::initializer_list<const Tensor<T>*> inputs) {
  if (tape == nullptr) return false;
  for (const Tensor<T>* t : inputs)
    if (t->defined() && t->requires_grad()) return true;
  return false;
}

}  // namespace detail

// ---- matrix products -------------------------------------------------------

template <class T>
Tensor<T> matmul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul: expects rank-2 tensors");
  require(a.dim(1) == b.dim(0),
          "matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<T> out = Tensor<T>::zeros({m, n});
  kernels::gemm_nn(m, k, n, a.data().data(), b.data().data(), out.data().data());
  if (detail::want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out, m, k, n]() {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      if (a.requires_grad()) kernels::gemm_nt(m, n, k, g, b.data().data(), a.grad().data());
      if (b.requires_grad()) kernels::gemm_tn(k, m, n, a.data().data(), g, b.grad().data());
    });
  }
  return out;
}

// a[m,k] * b[n,k]^T -> [m,n]
template <class T>
Tensor<T> matmul_nt(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul_nt: expects rank-2 tensors");
  require(a.dim(1) == b.dim(1),
          "matmul_nt: inner dimensions differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()) + "^T");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  Tensor<T> out = Tensor<T>::zeros({m, n});
  kernels::gemm_nt(m, k, n, a.data().data(), b.data().data(), out.data().data());
  if (detail::want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out, m, k, n]() {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      if (a.requires_grad()) kernels::gemm_nn(m, n, k, g, b.data().data(), a.grad().data());
      if (b.requires_grad()) kernels::gemm_tn(n, m, k, g, a.data().data(), b.grad().data());
    });
  }
  return out;
}

// x[t,in] * W[out,in]^T + b -> [t,out]; bias optional (undefined tensor skips it)
template <class T>
Tensor<T> linear(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b = {}) {
  require(x.rank() == 2 && w.rank() == 2, "linear: expects rank-2 input and weight");
  require(x.dim(1) == w.dim(1),
          "linear: input width " + shape_str(x.shape()) + " does not match weight " + shape_str(w.shape()));
  const std::size_t rows = x.dim(0), in = x.dim(1), out_dim = w.dim(0);
  if (b.defined()) require(b.rank() == 1 && b.dim(0) == out_dim, "linear: bias shape mismatch");
  Tensor<T> out = Tensor<T>::zeros({rows, out_dim});
  if (b.defined())
    for (std::size_t r = 0; r < rows; ++r)
      kernels::axpy(out_dim, T(1), b.data().data(), out.data().data() + r * out_dim);
  kernels::gemm_nt(rows, in, out_dim, x.data().data(), w.data().data(), out.data().data());
  if (detail::want_grad(tape, {&x, &w, &b})) {
    out.set_requires_grad(true);
    std::vector<Tensor<T>> ins = {x, w};
    if (b.defined()) ins.push_back(b);
    tape->record(std::move(ins), out, [x, w, b, out, rows, in, out_dim]() {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      if (x.requires_grad()) kernels::gemm_nn(rows, out_dim, in, g, w.data().data(), x.grad().data());
      if (w.requires_grad()) kernels::gemm_tn(out_dim, rows, in, g, x.data().data(), w.grad().data());
      if (b.defined() && b.requires_grad())
        for (std::size_t r = 0; r < rows; ++r)
          kernels::axpy(out_dim, T(1), g + r * out_dim, b.grad().data());
    });
  }
  return out;
}

// ---- causal convolution ----------------------------------------------------

// x[t,cin], kernel[k,cin,cout], bias[cout] -> [t,cout]. Output row t sees
// input rows max(0, t-k+1)..t only (left zero padding).
template <class T>
Tensor<T> causal_conv1d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias) {
  require(x.rank() == 2 && kernel.rank() == 3, "causal_conv1d: expects x rank 2, kernel rank 3");
  require(kernel.dim(0) >= 1, "causal_conv1d: kernel size must be >= 1");
  require(kernel.dim(1) == x.dim(1),
          "causal_conv1d: kernel input channels " + shape_str(kernel.shape()) + " do not match x " + shape_str(x.shape()));
  const std::size_t t = x.dim(0), k = kernel.dim(0), cin = kernel.dim(1), cout = kernel.dim(2);
  require(bias.rank() == 1 && bias.dim(0) == cout, "causal_conv1d: bias shape mismatch");
  Tensor<T> out = Tensor<T>::zeros({t, cout});
  for (std::size_t r = 0; r < t; ++r)
    kernels::axpy(cout, T(1), bias.data().data(), out.data().data() + r * cout);
  // tap d reaches input rows shifted by s = k-1-d toward the past
  for (std::size_t d = 0; d < k; ++d) {
    const std::size_t s = k - 1 - d;
    if (s >= t) continue;
    const std::size_t rows = t - s;
    kernels::gemm_nn(rows, cin, cout, x.data().data(), kernel.data().data() + d * cin * cout,
                     out.data().data() + s * cout);
  }
  if (detail::want_grad(tape, {&x, &kernel, &bias})) {
    out.set_requires_grad(true);
    tape->record({x, kernel, bias}, out, [x, kernel, bias, out, t, k, cin, cout]() {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      for (std::size_t d = 0; d < k; ++d) {
        const std::size_t s = k - 1 - d;
        if (s >= t) continue;
        const std::size_t rows = t - s;
        if (x.requires_grad())
          kernels::gemm_nt(rows, cout, cin, g + s * cout, kernel.data().data() + d * cin * cout,
                           x.grad().data());
        if (kernel.requires_grad())
          kernels::gemm_tn(cin, rows, cout, x.data().data(), g + s * cout,
                           kernel.grad().data() + d * cin * cout);
      }
      if (bias.requires_grad())
        for (std::size_t r = 0; r < t; ++r)
          kernels::axpy(cout, T(1), g + r * cout, bias.grad().data());
    });
  }
  return out;
}

// ---- embedding -------------------------------------------------------------

template <class T>
Tensor<T> embed(Tape<T>* tape, std::span<const int> ids, const Tensor<T>& table) {
  require(table.rank() == 2, "embed: table must be rank 2");
  const std::size_t v = table.dim(0), d = table.dim(1), t = ids.size();
  for (int id : ids)
    require(id >= 0 && static_cast<std::size_t>(id) < v, "embed: token id out of range");
  Tensor<T> out = Tensor<T>::zeros({t, d});
  for (std::size_t r = 0; r < t; ++r)
    kernels::axpy(d, T(1), table.data().data() + static_cast<std::size_t>(ids[r]) * d,
                  out.data().data() + r * d);
  if (detail::want_grad(tape, {&table})) {
    out.set_requires_grad(true);
    std::vector<int> idv(ids.begin(), ids.end());
    tape->record({table}, out, [table, out, idv = std::move(idv), d]() {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      for (std::size_t r = 0; r < idv.size(); ++r)
        kernels::axpy(d, T(1), g + r * d, table.grad().data() + static_cast<std::size_t>(idv[r]) * d);
    });
  }
  return out;
}

// ---- pointwise -------------------------------------------------------------

namespace detail {

template <class T, class Fwd, class Bwd>
Tensor<T> unary_pointwise(Tape<T>* tape, const Tensor<T>& x, Fwd fwd, Bwd dydx_from) {
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  auto xd = x.data();
  auto od = out.data();
  for (std::size_t i = 0; i < xd.size(); ++i) od[i] = fwd(xd[i]);
  if (want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record({x}, out, [x, out, dydx_from]() {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto xd = x.data();
      auto yd = out.data();
      auto xg = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i] * dydx_from(xd[i], yd[i]);
    });
  }
  return out;
}

}  // namespace detail

template <class T>
Tensor<T> sigmoid(Tape<T>* tape, const Tensor<T>& x) {
  return detail::unary_pointwise(
      tape, x, [](T v) { return T(1) / (T(1) + std::exp(-v)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <class T>
Tensor<T> tanh(Tape<T>* tape, const Tensor<T>& x) {
  return detail::unary_pointwise(
      tape, x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

// elu with alpha = 1
template <class T>
Tensor<T> elu(Tape<T>* tape, const Tensor<T>& x) {
  return detail::unary_pointwise(
      tape, x, [](T v) { return v > T(0) ? v : std::expm1(v); },
      [](T v, T y) { return v > T(0) ? T(1) : y + T(1); });
}

template <class T>
Tensor<T> scalar_mul(Tape<T>* tape, const Tensor<T>& x, T s) {
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  kernels::axpy(x.size(), s, x.data().data(), out.data().data());
  if (detail::want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record({x}, out, [x, out, s]() {
      if (!out.has_grad()) return;
      kernels::axpy(out.size(), s, out.grad().data(), x.grad().data());
    });
  }
  return out;
}

namespace detail {

template <class T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                      " vs " + shape_str(b.shape()));
}

}  // namespace detail

template <class T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  kernels::vadd(a.size(), a.data().data(), b.data().data(), out.data().data());
  if (detail::want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out]() {
      if (!out.has_grad()) return;
      auto g = out.grad();
      if (a.requires_grad()) kernels::axpy(g.size(), T(1), g.data(), a.grad().data());
      if (b.requires_grad()) kernels::axpy(g.size(), T(1), g.data(), b.grad().data());
    });
  }
  return out;
}

template <class T>
Tensor<T> sub(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "sub");
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  kernels::vsub(a.size(), a.data().data(), b.data().data(), out.data().data());
  if (detail::want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out]() {
      if (!out.has_grad()) return;
      auto g = out.grad();
      if (a.requires_grad()) kernels::axpy(g.size(), T(1), g.data(), a.grad().data());
      if (b.requires_grad()) kernels::axpy(g.size(), T(-1), g.data(), b.grad().data());
    });
  }
  return out;
}

template <class T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "mul");
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  kernels::vmul(a.size(), a.data().data(), b.data().data(), out.data().data());
  if (detail::want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out]() {
      if (!out.has_grad()) return;
      auto g = out.grad();
      if (a.requires_grad()) kernels::vmuladd(g.size(), g.data(), b.data().data(), a.grad().data());
      if (b.requires_grad()) kernels::vmuladd(g.size(), g.data(), a.data().data(), b.grad().data());
    });
  }
  return out;
}

// ---- concat ----------------------------------------------------------------

template <class T>
Tensor<T> concat_lastdim(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  require(a.rank() == 2 && b.rank() == 2, "concat_lastdim: expects rank-2 tensors");
  require(a.dim(0) == b.dim(0), "concat_lastdim: leading dimensions differ, " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
  const std::size_t rows = a.dim(0), da = a.dim(1), db = b.dim(1);
  Tensor<T> out = Tensor<T>::zeros({rows, da + db});
  for (std::size_t r = 0; r < rows; ++r) {
    kernels::axpy(da, T(1), a.data().data() + r * da, out.data().data() + r * (da + db));
    kernels::axpy(db, T(1), b.data().data() + r * db, out.data().data() + r * (da + db) + da);
  }
  if (detail::want_grad(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out, rows, da, db]() {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      for (std::size_t r = 0; r < rows; ++r) {
        if (a.requires_grad()) kernels::axpy(da, T(1), g + r * (da + db), a.grad().data() + r * da);
        if (b.requires_grad()) kernels::axpy(db, T(1), g + r * (da + db) + da, b.grad().data() + r * db);
      }
    });
  }
  return out;
}

// ---- softmax ---------------------------------------------------------------

// row-wise softmax with max subtraction
template <class T>
Tensor<T> row_softmax(Tape<T>* tape, const Tensor<T>& x) {
  require(x.rank() == 2, "row_softmax: expects rank-2 tensor");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  require(cols >= 1, "row_softmax: empty rows");
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data().data() + r * cols;
    T* yr = out.data().data() + r * cols;
    const T m = kernels::vmax(cols, xr);
    T s = T(0);
    for (std::size_t c = 0; c < cols; ++c) {
      yr[c] = std::exp(xr[c] - m);
      s += yr[c];
    }
    kernels::vscale(cols, T(1) / s, yr);
  }
  if (detail::want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record({x}, out, [x, out, rows, cols]() {
      if (!out.has_grad()) return;
      auto xg = x.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* g = out.grad().data() + r * cols;
        const T* y = out.data().data() + r * cols;
        const T gy = kernels::dot(cols, g, y);
        for (std::size_t c = 0; c < cols; ++c) xg[r * cols + c] += (g[c] - gy) * y[c];
      }
    });
  }
  return out;
}

template <class T>
Tensor<T> softmax_flat(Tape<T>* tape, const Tensor<T>& x) {
  require(x.rank() == 1, "softmax_flat: expects rank-1 tensor");
  const std::size_t n = x.dim(0);
  require(n >= 1, "softmax_flat: empty input");
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  const T m = kernels::vmax(n, x.data().data());
  T s = T(0);
  for (std::size_t c = 0; c < n; ++c) {
    out.data()[c] = std::exp(x.data()[c] - m);
    s += out.data()[c];
  }
  kernels::vscale(n, T(1) / s, out.data().data());
  if (detail::want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record({x}, out, [x, out, n]() {
      if (!out.has_grad()) return;
      const T* g = out.grad().data();
      const T* y = out.data().data();
      const T gy = kernels::dot(n, g, y);
      auto xg = x.grad();
      for (std::size_t c = 0; c < n; ++c) xg[c] += (g[c] - gy) * y[c];
    });
  }
  return out;
}

// ---- dropout ---------------------------------------------------------------

struct DropoutKey {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t layer = 0;
};

// Inverted dropout: keeps each element with probability keep_prob and scales
// survivors by 1/keep_prob. Identity in eval mode or at keep_prob == 1. The
// mask is a pure function of (key, element index), so the backward pass
// recomputes it instead of storing it.
template <class T>
Tensor<T> dropout(Tape<T>* tape, const Tensor<T>& x, double keep_prob, bool training, DropoutKey key) {
  require(keep_prob > 0.0 && keep_prob <= 1.0, "dropout: keep_prob must be in (0, 1]");
  if (!training || keep_prob == 1.0) return x;
  rng::CounterRng gen(key.seed, key.step, key.layer);
  const T scale = T(1.0 / keep_prob);
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  auto xd = x.data();
  auto od = out.data();
  for (std::size_t i = 0; i < xd.size(); ++i)
    od[i] = gen.unit(i) < keep_prob ? xd[i] * scale : T(0);
  if (detail::want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record({x}, out, [x, out, gen, keep_prob, scale]() {
      if (!out.has_grad()) return;
      auto g = out.grad();
      auto xg = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (gen.unit(i) < keep_prob) xg[i] += g[i] * scale;
    });
  }
  return out;
}

// ---- loss ------------------------------------------------------------------

// Mean over unmasked positions of -log softmax(logits[t])[target[t]].
// All-masked input is defined as zero loss with zero gradient.
template <class T>
Tensor<T> cross_entropy(Tape<T>* tape, const Tensor<T>& logits, std::span<const int> targets,
                        std::span<const std::uint8_t> mask) {
  require(logits.rank() == 2, "cross_entropy: logits must be rank 2");
  const std::size_t t = logits.dim(0), v = logits.dim(1);
  require(targets.size() == t && mask.size() == t, "cross_entropy: targets/mask length mismatch");
  std::size_t count = 0;
  T total = T(0);
  for (std::size_t r = 0; r < t; ++r) {
    if (!mask[r]) continue;
    require(targets[r] >= 0 && static_cast<std::size_t>(targets[r]) < v,
            "cross_entropy: target id out of range");
    const T* row = logits.data().data() + r * v;
    const T m = kernels::vmax(v, row);
    T s = T(0);
    for (std::size_t c = 0; c < v; ++c) s += std::exp(row[c] - m);
    total += m + std::log(s) - row[targets[r]];
    ++count;
  }
  Tensor<T> out = Tensor<T>::scalar(count ? total / static_cast<T>(count) : T(0));
  if (count > 0 && detail::want_grad(tape, {&logits})) {
    out.set_requires_grad(true);
    std::vector<int> tgt(targets.begin(), targets.end());
    std::vector<std::uint8_t> msk(mask.begin(), mask.end());
    tape->record({logits}, out,
                 [logits, out, tgt = std::move(tgt), msk = std::move(msk), t, v, count]() {
                   if (!out.has_grad()) return;
                   const T g = out.grad()[0] / static_cast<T>(count);
                   auto lg = logits.grad();
                   for (std::size_t r = 0; r < t; ++r) {
                     if (!msk[r]) continue;
                     const T* row = logits.data().data() + r * v;
                     const T m = kernels::vmax(v, row);
                     T s = T(0);
                     for (std::size_t c = 0; c < v; ++c) s += std::exp(row[c] - m);
                     for (std::size_t c = 0; c < v; ++c) {
                       T p = std::exp(row[c] - m) / s;
                       lg[r * v + c] += g * (p - (static_cast<std::size_t>(tgt[r]) == c ? T(1) : T(0)));
                     }
                   }
                 });
  }
  return out;
}

// ---- reductions ------------------------------------------------------------

template <class T>
Tensor<T> sum(Tape<T>* tape, const Tensor<T>& x) {
  Tensor<T> out = Tensor<T>::scalar(kernels::vsum(x.size(), x.data().data()));
  if (detail::want_grad(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record({x}, out, [x, out]() {
      if (!out.has_grad()) return;
      const T g = out.grad()[0];
      auto xg = x.grad();
      for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += g;
    });
  }
  return out;
}

// ---- spatial pooling -------------------------------------------------------

// 2x2 mean pooling with stride 2 over a [w*h, d] grid; odd extents are
// replicate-padded before pooling.
template <class T>
Tensor<T> avg_pool2x2(Tape<T>* tape, const Tensor<T>& grid, std::size_t w, std::size_t h) {
  require(grid.rank() == 2 && grid.dim(0) == w * h, "avg_pool2x2: grid shape does not match extents");
  const std::size_t d = grid.dim(1);
  const std::size_t ow = (w + 1) / 2, oh = (h + 1) / 2;
  Tensor<T> out = Tensor<T>::zeros({ow * oh, d});
  auto src_cell = [w, h](std::size_t i, std::size_t j) {
    return std::min(i, w - 1) * h + std::min(j, h - 1);
  };
  for (std::size_t i = 0; i < ow; ++i)
    for (std::size_t j = 0; j < oh; ++j) {
      T* dst = out.data().data() + (i * oh + j) * d;
      for (std::size_t di = 0; di < 2; ++di)
        for (std::size_t dj = 0; dj < 2; ++dj)
          kernels::axpy(d, T(0.25), grid.data().data() + src_cell(2 * i + di, 2 * j + dj) * d, dst);
    }
  if (detail::want_grad(tape, {&grid})) {
    out.set_requires_grad(true);
    tape->record({grid}, out, [grid, out, w, h, ow, oh, d, src_cell]() {
      if (!out.has_grad()) return;
      auto gg = grid.grad();
      for (std::size_t i = 0; i < ow; ++i)
        for (std::size_t j = 0; j < oh; ++j) {
          const T* g = out.grad().data() + (i * oh + j) * d;
          for (std::size_t di = 0; di < 2; ++di)
            for (std::size_t dj = 0; dj < 2; ++dj)
              kernels::axpy(d, T(0.25), g, gg.data() + src_cell(2 * i + di, 2 * j + dj) * d);
        }
    });
  }
  return out;
}

}  // namespace gha::ag

#endif  // GHA_OPS_HPP_
