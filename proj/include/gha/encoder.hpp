// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_ENCODER_HPP_
#define GHA_ENCODER_HPP_

#include <span>
#include <vector>

#include "gha/decoder.hpp"
#include "gha/featuremaps.hpp"
#include "gha/ops.hpp"

// Feature-map ingestion: each used grid is mapped by a learnable linear
// transform to the shared channel dimension, and any grid spatially wider
// than the designated mid-scale grid is mean-pooled (2x2, stride 2,
// replicate-padded on odd extents) until it fits.

namespace gha::encoder {

using ag::Tape;
using ag::Tensor;
using decoder::LinearParams;

template <class T>
struct ProjectedGrid {
  Tensor<T> cells;  // [w*h, dv]
  std::size_t w = 0;
  std::size_t h = 0;
};

template <class T>
Tensor<T> grid_to_tensor(const corpus::FeatureGrid& g) {
  std::vector<T> data(g.data.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<T>(g.data[i]);
  return Tensor<T>::from_data({g.cells(), g.channels}, std::move(data));
}

template <class T>
ProjectedGrid<T> project_grid(Tape<T>* tape, const corpus::FeatureGrid& g,
                              const LinearParams<T>& proj, std::size_t limit_w,
                              std::size_t limit_h) {
  ag::require(proj.weight.dim(1) == g.channels, "project_grid: weight shape does not match grid channels");
  ProjectedGrid<T> out;
  out.cells = ag::linear(tape, grid_to_tensor<T>(g), proj.weight, proj.bias);
  out.w = g.w;
  out.h = g.h;
  while (out.w > limit_w || out.h > limit_h) {
    out.cells = ag::avg_pool2x2(tape, out.cells, out.w, out.h);
    out.w = (out.w + 1) / 2;
    out.h = (out.h + 1) / 2;
  }
  return out;
}

// Projects the selected grids; grids wider than the middle selected grid are
// pooled down to its extents. A single selected grid is never pooled.
template <class T>
std::vector<ProjectedGrid<T>> project_scales(Tape<T>* tape, const corpus::FeatureMaps& fm,
                                             std::span<const std::size_t> selector,
                                             std::span<const LinearParams<T>> projections) {
  ag::require(selector.size() == projections.size(), "project_scales: selector/projection count mismatch");
  for (std::size_t idx : selector)
    ag::require(idx < fm.grids.size(), "project_scales: feature file has too few grids");
  const std::size_t mid = selector.size() / 2;
  const std::size_t limit_w = fm.grids[selector[mid]].w;
  const std::size_t limit_h = fm.grids[selector[mid]].h;
  std::vector<ProjectedGrid<T>> out;
  out.reserve(selector.size());
  for (std::size_t i = 0; i < selector.size(); ++i)
    out.push_back(project_grid(tape, fm.grids[selector[i]], projections[i], limit_w, limit_h));
  return out;
}

}  // namespace gha::encoder

#endif  // GHA_ENCODER_HPP_
