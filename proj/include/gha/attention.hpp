// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_ATTENTION_HPP_
#define GHA_ATTENTION_HPP_

#include <cmath>

#include "gha/decoder.hpp"
#include "gha/ops.hpp"

// Scaled dot-product attention over a spatial feature grid, plus the gated
// bottom-up combination of attention features across decoder levels:
//
//   s_ij = (1/sqrt(Dc)) v_ij^T (W c_t + u)      scores
//   a    = softmax over grid cells              weights
//   v~_t = sum_ij a_ij v_ij                     current-level feature
//   v^_t = v~_t + sigmoid(W_v h_t + b) (x) v^prev_t
//
// At the embedding level only v~ is used (no gate, nothing below it).

namespace gha::attention {

using ag::Tape;
using ag::Tensor;
using decoder::LinearParams;

template <class T>
struct AttendOut {
  Tensor<T> weights;  // [t, cells], each row sums to 1
  Tensor<T> vtilde;   // [t, dv]
};

template <class T>
struct GateCombineOut {
  Tensor<T> vhat;
  Tensor<T> gate;  // per-channel visual gate, kept for diagnostics
};

// grid [cells, dv], concepts [t, dc], score.weight [dv, dc]
template <class T>
AttendOut<T> attend(Tape<T>* tape, const Tensor<T>& grid, const Tensor<T>& concepts,
                    const LinearParams<T>& score) {
  ag::require(grid.rank() == 2 && concepts.rank() == 2, "attend: expects rank-2 grid and concepts");
  ag::require(score.weight.dim(0) == grid.dim(1) && score.weight.dim(1) == concepts.dim(1),
              "attend: score matrix shape does not match grid/concept dims");
  const T scale = T(1) / std::sqrt(static_cast<T>(concepts.dim(1)));
  Tensor<T> queries = ag::linear(tape, concepts, score.weight, score.bias);  // [t, dv]
  Tensor<T> scores = ag::scalar_mul(tape, ag::matmul_nt(tape, queries, grid), scale);
  Tensor<T> weights = ag::row_softmax(tape, scores);
  Tensor<T> vtilde = ag::matmul(tape, weights, grid);
  return {weights, vtilde};
}

// level 0 keeps the plain attention feature: v^0 = v~0
template <class T>
AttendOut<T> level_zero_attention(Tape<T>* tape, const Tensor<T>& grid, const Tensor<T>& embeddings,
                                  const LinearParams<T>& score) {
  return attend(tape, grid, embeddings, score);
}

// v^l = v~l + sigmoid(W_v h^l) (x) v^{l-1}; callers must not use this at
// level 0 (there is no lower level to select from).
template <class T>
GateCombineOut<T> gate_combine(Tape<T>* tape, const Tensor<T>& vtilde, const Tensor<T>& vhat_prev,
                               const Tensor<T>& h, const LinearParams<T>& vgate) {
  Tensor<T> gate = ag::sigmoid(tape, ag::linear(tape, h, vgate.weight, vgate.bias));
  Tensor<T> vhat = ag::add(tape, vtilde, ag::mul(tape, gate, vhat_prev));
  return {vhat, gate};
}

}  // namespace gha::attention

#endif  // GHA_ATTENTION_HPP_
