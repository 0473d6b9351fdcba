// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_SYNTHETIC_HPP_
#define GHA_SYNTHETIC_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "gha/featuremaps.hpp"

// Deterministic scene -> caption -> feature-map generator. Each scene is a
// small grid of cells holding colored shapes; the caption follows a fixed
// grammar over the objects in raster order, and the coarse feature grid
// carries an orthonormal code of each cell's (shape, color) plus occupancy
// and position channels, so captions are exactly recoverable from features.

namespace gha::corpus {

inline constexpr const char* kShapeNames[] = {"square", "circle", "triangle"};
inline constexpr const char* kColorNames[] = {"red", "blue", "green", "yellow"};
inline constexpr int kNumShapes = 3;
inline constexpr int kNumColors = 4;
inline constexpr int kNumCombos = kNumShapes * kNumColors;

// Channel layout of the generated grids (content code first):
//   coarse (scene resolution):    12 content + occupancy + row + col + bias = 16
//   mid (2x scene resolution):     5 content + occupancy + row + col        = 8
//   fine (4x scene resolution):    2 content + row + col                    = 4
inline constexpr std::size_t kCoarseChannels = 16;
inline constexpr std::size_t kMidChannels = 8;
inline constexpr std::size_t kFineChannels = 4;
inline constexpr std::size_t kContentChannels = 12;

struct SceneObject {
  int row = 0;
  int col = 0;
  int shape = 0;
  int color = 0;
  int combo() const { return shape * kNumColors + color; }
};

struct SceneSpec {
  int grid_w = 3;
  int grid_h = 3;
  std::uint64_t seed = 0;
  std::vector<SceneObject> objects;  // raster order, at least one
};

struct SyntheticScene {
  SceneSpec spec;
  std::string caption;
  FeatureMaps features;  // grids ordered fine, mid, coarse
};

struct SyntheticConfig {
  std::uint64_t seed = 0;
  int n_scenes = 1;
  int grid_w = 3;
  int grid_h = 3;
  int max_objects = 3;
};

// Pure function of its arguments; scene i depends only on (seed, i).
std::vector<SyntheticScene> generate_synthetic(const SyntheticConfig& cfg);

// Caption grammar: objects in raster order, "a <color> <shape>" each, joined
// by "left of" (same row) or "above" (earlier row).
std::string scene_caption(const SceneSpec& spec);

// The planted code. Columns of an orthonormal 12x12 matrix, one per
// (shape, color) combo; seeded by the dataset seed.
std::vector<float> planted_combo_code(std::uint64_t seed, int combo);
// Direction whose dot product with a cell's content channels is 1 exactly
// when the cell holds the named shape or color (0 elsewhere).
std::vector<float> planted_word_vector(std::uint64_t seed, const std::string& word);

}  // namespace gha::corpus

#endif  // GHA_SYNTHETIC_HPP_
