// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_FUSING_HPP_
#define GHA_FUSING_HPP_

#include <span>
#include <vector>

#include "gha/decoder.hpp"
#include "gha/ops.hpp"

// The fusing block: a GRU whose recurrence runs across decoder levels, not
// across time. Each step fuses the lower level's combined visual feature and
// concepts, x^l_t = [v^{l-1}_t, c^{l-1}_t]:
//
//   r = sigmoid(W_r [h^{l-1}, x])
//   h~ = tanh(W_h [r (x) h^{l-1}, x])
//   z = sigmoid(W_z [h^{l-1}, x])
//   h^l = (1 - z) (x) h^{l-1} + z (x) h~
//
// with h^0 = 0. Positions never mix: h^l_t depends only on column t of every
// lower level, and |h^l_t| < 1 elementwise follows from h^0 = 0 and the tanh
// range.

namespace gha::fusing {

using ag::Tape;
using ag::Tensor;
using decoder::LinearParams;

template <class T>
struct FusingParams {
  LinearParams<T> reset;      // W_r: [dh, dh + dv + dc]
  LinearParams<T> update;     // W_z
  LinearParams<T> candidate;  // W_h~
};

template <class T>
struct FuseOut {
  Tensor<T> h;
  Tensor<T> reset;
  Tensor<T> update;
  Tensor<T> candidate;
};

template <class T>
FuseOut<T> fuse_step(Tape<T>* tape, const Tensor<T>& h_prev, const Tensor<T>& vhat_prev,
                     const Tensor<T>& c_prev, const FusingParams<T>& p) {
  Tensor<T> x = ag::concat_lastdim(tape, vhat_prev, c_prev);
  Tensor<T> hx = ag::concat_lastdim(tape, h_prev, x);
  Tensor<T> r = ag::sigmoid(tape, ag::linear(tape, hx, p.reset.weight, p.reset.bias));
  Tensor<T> z = ag::sigmoid(tape, ag::linear(tape, hx, p.update.weight, p.update.bias));
  Tensor<T> rhx = ag::concat_lastdim(tape, ag::mul(tape, r, h_prev), x);
  Tensor<T> cand = ag::tanh(tape, ag::linear(tape, rhx, p.candidate.weight, p.candidate.bias));
  // h_prev + z (x) (h~ - h_prev) == (1 - z) (x) h_prev + z (x) h~
  Tensor<T> h = ag::add(tape, h_prev, ag::mul(tape, z, ag::sub(tape, cand, h_prev)));
  return {h, r, z, cand};
}

// Folds fuse_step bottom-up over precomputed per-level stacks (levels
// 0..L-1 of v^ and c), returning h^1..h^L.
template <class T>
std::vector<Tensor<T>> fuse_levels(Tape<T>* tape, std::span<const Tensor<T>> vhat_stack,
                                   std::span<const Tensor<T>> c_stack, const FusingParams<T>& p) {
  ag::require(vhat_stack.size() == c_stack.size(), "fuse_levels: level counts differ");
  ag::require(!vhat_stack.empty(), "fuse_levels: empty stacks");
  const std::size_t t = c_stack[0].dim(0);
  const std::size_t dh = p.reset.weight.dim(0);
  Tensor<T> h = Tensor<T>::zeros({t, dh});
  std::vector<Tensor<T>> out;
  for (std::size_t l = 0; l < vhat_stack.size(); ++l) {
    h = fuse_step(tape, h, vhat_stack[l], c_stack[l], p).h;
    out.push_back(h);
  }
  return out;
}

}  // namespace gha::fusing

#endif  // GHA_FUSING_HPP_
