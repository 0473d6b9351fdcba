// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_FEATUREMAPS_HPP_
#define GHA_FEATUREMAPS_HPP_

#include <cstddef>
#include <string>
#include <vector>

namespace gha::corpus {

// One spatial grid of image features; data is row-major (row, col, channel),
// cell (i, j) at offset (i * h + j) * channels.
struct FeatureGrid {
  std::size_t w = 0;  // rows
  std::size_t h = 0;  // cols
  std::size_t channels = 0;
  std::vector<float> data;

  std::size_t cells() const { return w * h; }
  const float* cell(std::size_t i, std::size_t j) const { return data.data() + (i * h + j) * channels; }
  float* cell(std::size_t i, std::size_t j) { return data.data() + (i * h + j) * channels; }
};

struct FeatureMaps {
  std::vector<FeatureGrid> grids;
};

// GHAF container: magic "GHAF", u32 version = 1, u32 n_grids, then per grid
// u32 w, u32 h, u32 D and w*h*D little-endian f32 values.
FeatureMaps read_ghaf(const std::string& path);
void write_ghaf(const std::string& path, const FeatureMaps& fm);

}  // namespace gha::corpus

#endif  // GHA_FEATUREMAPS_HPP_
