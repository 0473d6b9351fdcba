// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_GRADCHECK_HPP_
#define GHA_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "gha/tensor.hpp"

// Central finite differences at 64-bit, the independent oracle for every
// backward rule. The loss closure must rebuild the forward pass from the
// (mutated) parameter data on each call.

namespace gha::gradcheck {

inline double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
  return std::abs(analytic - numeric) / denom;
}

struct Report {
  double max_rel = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Sweeps every element of `param`, comparing `analytic_grad` against
// (f(x+h) - f(x-h)) / 2h.
template <class LossFn>
Report check_tensor(LossFn loss, ag::Tensor<double> param, std::span<const double> analytic_grad,
                    double h = 1e-5) {
  Report rep;
  auto data = param.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double saved = data[i];
    data[i] = saved + h;
    const double up = loss();
    data[i] = saved - h;
    const double down = loss();
    data[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double ad = i < analytic_grad.size() ? analytic_grad[i] : 0.0;
    const double r = rel_err(ad, fd);
    if (r > rep.max_rel) {
      rep.max_rel = r;
      rep.worst_index = i;
      rep.worst_analytic = ad;
      rep.worst_numeric = fd;
    }
  }
  return rep;
}

}  // namespace gha::gradcheck

#endif  // GHA_GRADCHECK_HPP_
