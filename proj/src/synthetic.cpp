// SPDX-License-Identifier: Apache-2.0

#include "gha/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "gha/rng.hpp"

namespace gha::corpus {

namespace {

// Orthonormal 12x12 code matrix: seeded gaussian columns, Gram-Schmidt in
// double. Column c is the content code of combo c.
std::vector<double> code_matrix(std::uint64_t seed) {
  constexpr int n = kNumCombos;
  std::mt19937_64 rng(gha::rng::hash_combine(seed, 0x636f6465ULL));  // "code"
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> m(n * n);
  for (auto& v : m) v = gauss(rng);
  for (int c = 0; c < n; ++c) {
    for (int p = 0; p < c; ++p) {
      double proj = 0;
      for (int r = 0; r < n; ++r) proj += m[r * n + c] * m[r * n + p];
      for (int r = 0; r < n; ++r) m[r * n + c] -= proj * m[r * n + p];
    }
    double norm = 0;
    for (int r = 0; r < n; ++r) norm += m[r * n + c] * m[r * n + c];
    norm = std::sqrt(norm);
    for (int r = 0; r < n; ++r) m[r * n + c] /= norm;
  }
  return m;
}

// Fixed random projections for the lower-resolution content channels.
std::vector<double> content_projection(std::uint64_t seed, int rows, std::uint64_t salt) {
  std::mt19937_64 rng(gha::rng::hash_combine(seed, salt));
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(double(kNumCombos)));
  std::vector<double> m(static_cast<std::size_t>(rows) * kNumCombos);
  for (auto& v : m) v = gauss(rng);
  return m;
}

float pos_channel(int idx, int extent) {
  return extent > 1 ? static_cast<float>(idx) / static_cast<float>(extent - 1) : 0.5f;
}

FeatureGrid build_grid(const SceneSpec& spec, int scale, std::size_t channels,
                       const std::vector<double>& content, int content_rows, bool occupancy,
                       bool bias) {
  FeatureGrid g;
  g.w = static_cast<std::size_t>(spec.grid_w * scale);
  g.h = static_cast<std::size_t>(spec.grid_h * scale);
  g.channels = channels;
  g.data.assign(g.w * g.h * channels, 0.0f);

  std::vector<int> combo_at(static_cast<std::size_t>(spec.grid_w * spec.grid_h), -1);
  for (const auto& obj : spec.objects)
    combo_at[static_cast<std::size_t>(obj.row * spec.grid_h + obj.col)] = obj.combo();

  for (std::size_t i = 0; i < g.w; ++i)
    for (std::size_t j = 0; j < g.h; ++j) {
      float* cell = g.cell(i, j);
      const int src_row = static_cast<int>(i) / scale;
      const int src_col = static_cast<int>(j) / scale;
      const int combo = combo_at[static_cast<std::size_t>(src_row * spec.grid_h + src_col)];
      std::size_t ch = 0;
      if (combo >= 0)
        for (int r = 0; r < content_rows; ++r)
          cell[ch + r] = static_cast<float>(content[static_cast<std::size_t>(r) * kNumCombos + combo]);
      ch += static_cast<std::size_t>(content_rows);
      if (occupancy) cell[ch++] = combo >= 0 ? 1.0f : 0.0f;
      cell[ch++] = pos_channel(static_cast<int>(i), static_cast<int>(g.w));
      cell[ch++] = pos_channel(static_cast<int>(j), static_cast<int>(g.h));
      if (bias) cell[ch++] = 1.0f;
    }
  return g;
}

}  // namespace

std::string scene_caption(const SceneSpec& spec) {
  if (spec.objects.empty()) throw std::invalid_argument("scene: needs at least one object");
  std::string caption;
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const auto& obj = spec.objects[i];
    if (i > 0) {
      const auto& prev = spec.objects[i - 1];
      caption += prev.row == obj.row ? " left of " : " above ";
    }
    caption += "a ";
    caption += kColorNames[obj.color];
    caption += " ";
    caption += kShapeNames[obj.shape];
  }
  return caption;
}

std::vector<float> planted_combo_code(std::uint64_t seed, int combo) {
  auto m = code_matrix(seed);
  std::vector<float> out(kContentChannels);
  for (int r = 0; r < kNumCombos; ++r) out[static_cast<std::size_t>(r)] = static_cast<float>(m[r * kNumCombos + combo]);
  return out;
}

std::vector<float> planted_word_vector(std::uint64_t seed, const std::string& word) {
  auto m = code_matrix(seed);
  std::vector<float> out(kContentChannels, 0.0f);
  bool matched = false;
  for (int s = 0; s < kNumShapes; ++s)
    for (int c = 0; c < kNumColors; ++c) {
      if (word != kShapeNames[s] && word != kColorNames[c]) continue;
      const int combo = s * kNumColors + c;
      for (int r = 0; r < kNumCombos; ++r)
        out[static_cast<std::size_t>(r)] += static_cast<float>(m[r * kNumCombos + combo]);
      matched = true;
    }
  if (!matched) throw std::invalid_argument("planted_word_vector: not a shape or color word: " + word);
  return out;
}

std::vector<SyntheticScene> generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.grid_w < 1 || cfg.grid_h < 1)
    throw std::invalid_argument("generate_synthetic: grid extents must be >= 1");
  const auto coarse_code = code_matrix(cfg.seed);
  const auto mid_code = content_projection(cfg.seed, 5, 0x6d6964ULL);   // "mid"
  const auto fine_code = content_projection(cfg.seed, 2, 0x66696eULL);  // "fin"

  std::vector<SyntheticScene> scenes;
  scenes.reserve(static_cast<std::size_t>(cfg.n_scenes));
  const int cells = cfg.grid_w * cfg.grid_h;
  for (int idx = 0; idx < cfg.n_scenes; ++idx) {
    std::mt19937_64 rng(gha::rng::hash_combine(cfg.seed, static_cast<std::uint64_t>(idx)));
    SceneSpec spec;
    spec.grid_w = cfg.grid_w;
    spec.grid_h = cfg.grid_h;
    spec.seed = cfg.seed;

    const int max_here = std::min(cfg.max_objects, cells);
    std::uniform_int_distribution<int> n_dist(1, max_here);
    const int n_objects = n_dist(rng);
    std::vector<int> cell_ids(static_cast<std::size_t>(cells));
    for (int c = 0; c < cells; ++c) cell_ids[static_cast<std::size_t>(c)] = c;
    std::shuffle(cell_ids.begin(), cell_ids.end(), rng);
    cell_ids.resize(static_cast<std::size_t>(n_objects));
    std::sort(cell_ids.begin(), cell_ids.end());  // raster order

    std::uniform_int_distribution<int> shape_dist(0, kNumShapes - 1);
    std::uniform_int_distribution<int> color_dist(0, kNumColors - 1);
    for (int c : cell_ids) {
      SceneObject obj;
      obj.row = c / cfg.grid_h;
      obj.col = c % cfg.grid_h;
      obj.shape = shape_dist(rng);
      obj.color = color_dist(rng);
      spec.objects.push_back(obj);
    }

    SyntheticScene scene;
    scene.caption = scene_caption(spec);
    scene.features.grids.push_back(build_grid(spec, 4, kFineChannels, fine_code, 2, false, false));
    scene.features.grids.push_back(build_grid(spec, 2, kMidChannels, mid_code, 5, true, false));
    scene.features.grids.push_back(build_grid(spec, 1, kCoarseChannels, coarse_code, 12, true, true));
    scene.spec = std::move(spec);
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

}  // namespace gha::corpus
