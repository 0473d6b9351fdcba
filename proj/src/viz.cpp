// SPDX-License-Identifier: Apache-2.0

#include "gha/viz.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace gha::viz {

namespace {

float sample_clamped(std::span<const float> src, std::size_t rows, std::size_t cols, long i, long j) {
  const auto ci = static_cast<std::size_t>(std::clamp(i, 0L, static_cast<long>(rows) - 1));
  const auto cj = static_cast<std::size_t>(std::clamp(j, 0L, static_cast<long>(cols) - 1));
  return src[ci * cols + cj];
}

}  // namespace

std::vector<float> bilinear_upsample(std::span<const float> src, std::size_t rows, std::size_t cols,
                                     std::size_t out_rows, std::size_t out_cols) {
  ag::require(src.size() == rows * cols, "upsample: source size does not match extents");
  ag::require(rows >= 1 && cols >= 1 && out_rows >= 1 && out_cols >= 1, "upsample: empty extents");
  std::vector<float> out(out_rows * out_cols);
  const double sy = static_cast<double>(rows) / static_cast<double>(out_rows);
  const double sx = static_cast<double>(cols) / static_cast<double>(out_cols);
  for (std::size_t i = 0; i < out_rows; ++i) {
    const double fy = (static_cast<double>(i) + 0.5) * sy - 0.5;
    const long i0 = static_cast<long>(std::floor(fy));
    const double wy = fy - static_cast<double>(i0);
    for (std::size_t j = 0; j < out_cols; ++j) {
      const double fx = (static_cast<double>(j) + 0.5) * sx - 0.5;
      const long j0 = static_cast<long>(std::floor(fx));
      const double wx = fx - static_cast<double>(j0);
      const double top = (1.0 - wx) * sample_clamped(src, rows, cols, i0, j0) +
                         wx * sample_clamped(src, rows, cols, i0, j0 + 1);
      const double bottom = (1.0 - wx) * sample_clamped(src, rows, cols, i0 + 1, j0) +
                            wx * sample_clamped(src, rows, cols, i0 + 1, j0 + 1);
      out[i * out_cols + j] = static_cast<float>((1.0 - wy) * top + wy * bottom);
    }
  }
  return out;
}

std::vector<float> nearest_upsample(std::span<const float> src, std::size_t rows, std::size_t cols,
                                    std::size_t out_rows, std::size_t out_cols) {
  ag::require(src.size() == rows * cols, "upsample: source size does not match extents");
  std::vector<float> out(out_rows * out_cols);
  for (std::size_t i = 0; i < out_rows; ++i)
    for (std::size_t j = 0; j < out_cols; ++j) {
      const std::size_t si = std::min(rows - 1, i * rows / out_rows);
      const std::size_t sj = std::min(cols - 1, j * cols / out_cols);
      out[i * out_cols + j] = src[si * cols + sj];
    }
  return out;
}

void write_pgm(const std::string& path, std::span<const float> img, std::size_t rows,
               std::size_t cols) {
  ag::require(img.size() == rows * cols, "pgm: image size does not match extents");
  float mx = 0.0f;
  for (float v : img) mx = std::max(mx, v);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("pgm: cannot write " + path);
  os << "P5\n" << cols << " " << rows << "\n255\n";
  for (float v : img) {
    const double scaled = mx > 0.0f ? double(v) / mx * 255.0 : 0.0;
    os.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(scaled, 0.0, 255.0)))));
  }
  if (!os) throw std::runtime_error("pgm: write failed for " + path);
}

std::vector<float> export_attention(std::span<const float> weights, std::size_t rows,
                                    std::size_t cols, std::size_t out_rows, std::size_t out_cols,
                                    const std::string& pgm_path, const std::string& json_path,
                                    bool bilinear) {
  auto up = bilinear ? bilinear_upsample(weights, rows, cols, out_rows, out_cols)
                     : nearest_upsample(weights, rows, cols, out_rows, out_cols);
  write_pgm(pgm_path, up, out_rows, out_cols);
  nlohmann::json j{{"w", rows},
                   {"h", cols},
                   {"target_w", out_rows},
                   {"target_h", out_cols},
                   {"interpolation", bilinear ? "bilinear" : "nearest"},
                   {"weights", std::vector<float>(weights.begin(), weights.end())}};
  std::ofstream os(json_path, std::ios::trunc);
  if (!os) throw std::runtime_error("export_attention: cannot write " + json_path);
  os << j.dump(2) << "\n";
  return up;
}

GateStats gate_report(const model::Diagnostics& diag, GateThresholds thresholds) {
  GateStats stats;
  stats.words = diag.t;
  for (const auto& lv : diag.levels) {
    if (lv.visual_gate.empty() && lv.concept_gate.empty()) continue;
    GateStats::Level out;
    out.level = lv.level;
    if (!lv.visual_gate.empty()) {
      const std::size_t dv = diag.visual_dim;
      for (std::size_t t = 0; t < diag.t; ++t) {
        std::size_t on = 0;
        for (std::size_t d = 0; d < dv; ++d)
          if (lv.visual_gate[t * dv + d] > thresholds.visual) ++on;
        out.visual_on.push_back(static_cast<double>(on) / static_cast<double>(dv));
      }
    }
    if (!lv.concept_gate.empty()) {
      const std::size_t dc = diag.concept_dim;
      for (std::size_t t = 0; t < diag.t; ++t) {
        std::size_t on = 0;
        for (std::size_t d = 0; d < dc; ++d)
          if (lv.concept_gate[t * dc + d] > thresholds.concepts) ++on;
        out.concept_on.push_back(static_cast<double>(on) / static_cast<double>(dc));
      }
    }
    stats.levels.push_back(std::move(out));
  }
  return stats;
}

nlohmann::json gate_report_json(const GateStats& stats, const std::vector<std::string>& words,
                                GateThresholds thresholds) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& lv : stats.levels) {
    nlohmann::json entry{{"level", lv.level}};
    if (!lv.visual_on.empty()) entry["visual_on"] = lv.visual_on;
    if (!lv.concept_on.empty()) entry["concept_on"] = lv.concept_on;
    levels.push_back(std::move(entry));
  }
  return nlohmann::json{{"words", words},
                        {"thresholds", {{"visual", thresholds.visual}, {"concept", thresholds.concepts}}},
                        {"levels", levels}};
}

}  // namespace gha::viz
