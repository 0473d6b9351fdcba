// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_INIT_HPP_
#define GHA_INIT_HPP_

#include <cmath>
#include <random>

#include "gha/tensor.hpp"

namespace gha::init {

template <class T>
void uniform(ag::Tensor<T>& t, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (T& v : t.data()) v = static_cast<T>(dist(rng));
}

// uniform in +-sqrt(6 / (fan_in + fan_out))
template <class T>
void glorot_uniform(ag::Tensor<T>& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  uniform(t, -bound, bound, rng);
}

}  // namespace gha::init

#endif  // GHA_INIT_HPP_
