// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_RNG_HPP_
#define GHA_RNG_HPP_

#include <cstdint>

namespace gha::rng {

// splitmix64 finalizer; good enough diffusion for counter-based streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (mix64(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// uniform in [0,1)
inline double to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Stateless generator keyed by (seed, step, layer); element index is the
// counter, so masks are reproducible regardless of evaluation order.
struct CounterRng {
  std::uint64_t key;
  CounterRng(std::uint64_t seed, std::uint64_t step, std::uint64_t layer)
      : key(hash_combine(hash_combine(seed, step), layer)) {}
  double unit(std::uint64_t index) const { return to_unit(mix64(key ^ mix64(index))); }
};

}  // namespace gha::rng

#endif  // GHA_RNG_HPP_
