// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_DECODER_HPP_
#define GHA_DECODER_HPP_

#include <cstddef>
#include <string>

#include "gha/ops.hpp"

// The causal word decoder. Level 0 is the word embedding; levels 1..L are
// causal convolutions with gated linear units. In the hierarchical variant
// the gate is driven by the fusing-block hidden state h^l (a pointwise
// transform: h^l_t summarizes position t, so the gate never mixes
// positions); the plain variant gates from the previous layer as in a
// standard GLU.

namespace gha::decoder {

using ag::Tape;
using ag::Tensor;

// words visible to one unit after `layers` convolutions of width `kernel`
inline std::size_t receptive_field(std::size_t layers, std::size_t kernel) {
  return layers * (kernel - 1) + 1;
}

struct DecoderConfig {
  std::size_t layers = 6;       // L
  std::size_t kernel = 3;       // k of the widening stage
  std::size_t concept_dim = 300;
  bool bottleneck = false;      // [1,Dc; k,Dc; 1,Dc] stages with a shortcut
  std::string label;

  // bottleneck stages widen only through the middle k-tap convolution
  std::size_t receptive_field() const { return decoder::receptive_field(layers, kernel); }
  std::size_t conv_layer_count() const { return bottleneck ? 3 * layers : layers; }
};

template <class T>
struct ConvParams {
  Tensor<T> kernel;  // [k, cin, cout]
  Tensor<T> bias;    // [cout]
};

template <class T>
struct LinearParams {
  Tensor<T> weight;  // [out, in]
  Tensor<T> bias;    // [out]
};

template <class T>
struct GluLayerParams {
  ConvParams<T> conv;     // linear unit, causal kernel k
  LinearParams<T> gate;   // pointwise gate from the fusing state
};

template <class T>
struct BaselineGluParams {
  ConvParams<T> conv;  // linear unit
  ConvParams<T> gate;  // gate, also a causal convolution of c^{l-1}
};

template <class T>
struct BottleneckParams {
  ConvParams<T> in_proj;   // kernel 1
  ConvParams<T> mid;       // kernel k
  ConvParams<T> out_proj;  // kernel 1
};

template <class T>
struct GluOut {
  Tensor<T> out;
  Tensor<T> gate;  // sigmoid activations, kept for diagnostics
};

template <class T>
Tensor<T> embed(Tape<T>* tape, std::span<const int> tokens, const Tensor<T>& table) {
  return ag::embed(tape, tokens, table);
}

// c^l = (W_a * c^{l-1}) (x) sigmoid(W_b h^l)
template <class T>
GluOut<T> glu_layer(Tape<T>* tape, const Tensor<T>& c_prev, const Tensor<T>& h,
                    const GluLayerParams<T>& p) {
  Tensor<T> lin = ag::causal_conv1d(tape, c_prev, p.conv.kernel, p.conv.bias);
  Tensor<T> gate = ag::sigmoid(tape, ag::linear(tape, h, p.gate.weight, p.gate.bias));
  return {ag::mul(tape, lin, gate), gate};
}

// standard GLU: both halves convolve c^{l-1}
template <class T>
GluOut<T> baseline_glu_layer(Tape<T>* tape, const Tensor<T>& c_prev, const BaselineGluParams<T>& p) {
  Tensor<T> lin = ag::causal_conv1d(tape, c_prev, p.conv.kernel, p.conv.bias);
  Tensor<T> gate = ag::sigmoid(tape, ag::causal_conv1d(tape, c_prev, p.gate.kernel, p.gate.bias));
  return {ag::mul(tape, lin, gate), gate};
}

// pointwise -> causal k -> pointwise, gate on the final stage, shortcut
// around the whole block
template <class T>
GluOut<T> bottleneck_layer(Tape<T>* tape, const Tensor<T>& c_prev, const Tensor<T>& h,
                           const BottleneckParams<T>& p, const LinearParams<T>& gate_p) {
  Tensor<T> s1 = ag::causal_conv1d(tape, c_prev, p.in_proj.kernel, p.in_proj.bias);
  Tensor<T> s2 = ag::causal_conv1d(tape, s1, p.mid.kernel, p.mid.bias);
  Tensor<T> s3 = ag::causal_conv1d(tape, s2, p.out_proj.kernel, p.out_proj.bias);
  Tensor<T> gate = ag::sigmoid(tape, ag::linear(tape, h, gate_p.weight, gate_p.bias));
  return {ag::add(tape, ag::mul(tape, s3, gate), c_prev), gate};
}

template <class T>
GluOut<T> baseline_bottleneck_layer(Tape<T>* tape, const Tensor<T>& c_prev,
                                    const BottleneckParams<T>& p, const ConvParams<T>& gate_p) {
  Tensor<T> s1 = ag::causal_conv1d(tape, c_prev, p.in_proj.kernel, p.in_proj.bias);
  Tensor<T> s2 = ag::causal_conv1d(tape, s1, p.mid.kernel, p.mid.bias);
  Tensor<T> s3 = ag::causal_conv1d(tape, s2, p.out_proj.kernel, p.out_proj.bias);
  // gate drives the final (pointwise) stage from that stage's input
  Tensor<T> gate = ag::sigmoid(tape, ag::causal_conv1d(tape, s2, gate_p.kernel, gate_p.bias));
  return {ag::add(tape, ag::mul(tape, s3, gate), c_prev), gate};
}

}  // namespace gha::decoder

#endif  // GHA_DECODER_HPP_
