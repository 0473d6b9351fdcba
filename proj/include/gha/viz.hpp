// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_VIZ_HPP_
#define GHA_VIZ_HPP_

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gha/model.hpp"

namespace gha::viz {

// Center-aligned bilinear interpolation with edge clamping; rows/cols name
// the first/second spatial index of the row-major map.
std::vector<float> bilinear_upsample(std::span<const float> src, std::size_t rows, std::size_t cols,
                                     std::size_t out_rows, std::size_t out_cols);

std::vector<float> nearest_upsample(std::span<const float> src, std::size_t rows, std::size_t cols,
                                    std::size_t out_rows, std::size_t out_cols);

// binary P5 portable graymap, values max-normalized to 255
void write_pgm(const std::string& path, std::span<const float> img, std::size_t rows,
               std::size_t cols);

// Upsamples one attention map and writes the graymap plus the raw weights as
// JSON. Returns the upsampled image (tests check its mass).
std::vector<float> export_attention(std::span<const float> weights, std::size_t rows,
                                    std::size_t cols, std::size_t out_rows, std::size_t out_cols,
                                    const std::string& pgm_path, const std::string& json_path,
                                    bool bilinear = true);

struct GateThresholds {
  double visual = 0.65;
  double concepts = 0.25;
};

// Fraction of gates "on" per generated word and level. Levels without gates
// (the embedding level) are absent from the report, not zero.
struct GateStats {
  struct Level {
    int level = 0;
    std::vector<double> visual_on;   // per word; empty when the level has no visual gates
    std::vector<double> concept_on;  // per word
  };
  std::size_t words = 0;
  std::vector<Level> levels;
};

GateStats gate_report(const model::Diagnostics& diag, GateThresholds thresholds = {});

nlohmann::json gate_report_json(const GateStats& stats, const std::vector<std::string>& words,
                                GateThresholds thresholds);

}  // namespace gha::viz

#endif  // GHA_VIZ_HPP_
