// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_SELFCHECK_HPP_
#define GHA_SELFCHECK_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace gha::selfcheck {

struct ParamCheck {
  std::string name;
  double max_rel = 0.0;
  bool pass = true;
};

struct GradCheckSummary {
  std::vector<ParamCheck> params;
  double max_rel = 0.0;
  bool pass = true;
};

// Builds the requested variant at 64-bit on a synthetic desk scene and
// compares every trainable parameter's backward gradient against central
// finite differences (h = 1e-5).
GradCheckSummary run_model_gradcheck(const std::string& variant, bool desk, std::uint64_t seed,
                                     double tolerance = 1e-4);

}  // namespace gha::selfcheck

#endif  // GHA_SELFCHECK_HPP_
