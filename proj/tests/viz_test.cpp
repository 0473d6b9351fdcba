// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "gha/viz.hpp"

using namespace gha;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ghacap_tests" / "viz";
  std::filesystem::create_directories(dir);
  return dir / name;
}

double total(std::span<const float> v) {
  double s = 0;
  for (float x : v) s += x;
  return s;
}

}  // namespace

TEST_CASE("bilinear upsampling of a uniform map is uniform") {
  std::vector<float> src(9, 1.0f / 9.0f);
  auto up = viz::bilinear_upsample(src, 3, 3, 224, 224);
  for (float v : up) CHECK(v == doctest::Approx(1.0 / 9.0).epsilon(1e-6));
}

TEST_CASE("bilinear spike on 2x2 ramps from its corner") {
  std::vector<float> src = {1.0f, 0.0f, 0.0f, 0.0f};
  auto up = viz::bilinear_upsample(src, 2, 2, 16, 16);
  // center sampling: source coordinate of output j is (j + 0.5)/8 - 0.5
  CHECK(up[0] == doctest::Approx(1.0).epsilon(1e-6));              // clamped into the spike cell
  CHECK(up[15] == doctest::Approx(0.0).epsilon(1e-9));             // far corner
  const double w7 = 1.0 - ((7 + 0.5) / 8.0 - 0.5);                  // in-cell weight at column 7
  CHECK(up[7] == doctest::Approx(w7).epsilon(1e-6));               // row 0, interpolating columns
  CHECK(up[7 * 16 + 7] == doctest::Approx(w7 * w7).epsilon(1e-6));  // both axes interpolate
  // maximum sits in the spike cell's quadrant
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) CHECK(up[i * 16 + j] <= up[0] + 1e-9);
}

TEST_CASE("upsampling preserves total mass within 1e-3") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<float> src(49);
    float z = 0;
    for (auto& v : src) {
      v = dist(rng);
      z += v;
    }
    for (auto& v : src) v /= z;  // attention maps sum to one
    auto up = viz::bilinear_upsample(src, 7, 7, 224, 224);
    const double expected = (224.0 * 224.0) / (7.0 * 7.0);
    CHECK(total(up) == doctest::Approx(expected).epsilon(1e-3));
  }
}

TEST_CASE("nearest upsampling replicates blocks") {
  std::vector<float> src = {1.0f, 2.0f, 3.0f, 4.0f};
  auto up = viz::nearest_upsample(src, 2, 2, 4, 4);
  CHECK(up[0] == 1.0f);
  CHECK(up[3] == 2.0f);
  CHECK(up[12] == 3.0f);
  CHECK(up[15] == 4.0f);
}

TEST_CASE("pgm bytes: header, max-normalization, uniform gray") {
  SUBCASE("uniform map becomes uniform 255") {
    std::vector<float> img(12, 0.25f);
    auto path = temp_file("uniform.pgm");
    viz::write_pgm(path.string(), img, 3, 4);
    std::ifstream is(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    const std::string header = "P5\n4 3\n255\n";
    REQUIRE(bytes.size() == header.size() + 12);
    CHECK(bytes.compare(0, header.size(), header) == 0);
    for (std::size_t i = header.size(); i < bytes.size(); ++i)
      CHECK(static_cast<unsigned char>(bytes[i]) == 255);
  }
  SUBCASE("all-zero map stays black") {
    std::vector<float> img(4, 0.0f);
    auto path = temp_file("zero.pgm");
    viz::write_pgm(path.string(), img, 2, 2);
    std::ifstream is(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    for (std::size_t i = bytes.size() - 4; i < bytes.size(); ++i) CHECK(bytes[i] == 0);
  }
}

TEST_CASE("export_attention writes the graymap and raw weights") {
  std::vector<float> weights = {0.7f, 0.1f, 0.1f, 0.1f};
  auto pgm = temp_file("export.pgm");
  auto jsonf = temp_file("export.json");
  auto up = viz::export_attention(weights, 2, 2, 16, 16, pgm.string(), jsonf.string());
  CHECK(up.size() == 256);
  std::ifstream is(jsonf);
  auto j = nlohmann::json::parse(is);
  CHECK(j.at("w") == 2);
  CHECK(j.at("target_w") == 16);
  auto raw = j.at("weights").get<std::vector<float>>();
  CHECK(raw == weights);
}

TEST_CASE("gate_report") {
  model::Diagnostics diag;
  diag.t = 2;
  diag.visual_dim = 4;
  diag.concept_dim = 4;
  diag.hidden_dim = 2;

  model::LevelDiagnostics l0;
  l0.level = 0;  // embedding level: no gates at all
  diag.levels.push_back(l0);

  model::LevelDiagnostics l1;
  l1.level = 1;
  // word 0: visual gates {0.9, 0.7, 0.3, 0.1} -> 2 of 4 above 0.65
  // word 1: visual gates {0.64, 0.66, 0.66, 0.66} -> 3 of 4
  l1.visual_gate = {0.9f, 0.7f, 0.3f, 0.1f, 0.64f, 0.66f, 0.66f, 0.66f};
  // word 0: concept gates {0.3, 0.2, 0.26, 0.24} -> 2 of 4 above 0.25
  // word 1: all 0.99 -> 4 of 4
  l1.concept_gate = {0.3f, 0.2f, 0.26f, 0.24f, 0.99f, 0.99f, 0.99f, 0.99f};
  diag.levels.push_back(l1);

  auto stats = viz::gate_report(diag, {});
  REQUIRE(stats.levels.size() == 1);  // level 0 absent, not zero
  CHECK(stats.levels[0].level == 1);
  CHECK(stats.levels[0].visual_on == std::vector<double>{0.5, 0.75});
  CHECK(stats.levels[0].concept_on == std::vector<double>{0.5, 1.0});

  SUBCASE("extreme activations give fractions 0 and 1") {
    model::Diagnostics d2 = diag;
    for (auto& v : d2.levels[1].visual_gate) v = 0.99f;
    for (auto& v : d2.levels[1].concept_gate) v = 0.0f;
    auto s2 = viz::gate_report(d2, {});
    CHECK(s2.levels[0].visual_on == std::vector<double>{1.0, 1.0});
    CHECK(s2.levels[0].concept_on == std::vector<double>{0.0, 0.0});
  }
  SUBCASE("fractions are monotone non-increasing in the threshold") {
    for (double lo : {0.1, 0.3, 0.5}) {
      auto a = viz::gate_report(diag, {lo, lo});
      auto b = viz::gate_report(diag, {lo + 0.2, lo + 0.2});
      for (std::size_t t = 0; t < 2; ++t) {
        CHECK(b.levels[0].visual_on[t] <= a.levels[0].visual_on[t]);
        CHECK(b.levels[0].concept_on[t] <= a.levels[0].concept_on[t]);
      }
    }
  }
  SUBCASE("json series includes words and omits the embedding level") {
    auto j = viz::gate_report_json(stats, {"red", "square"}, {});
    CHECK(j.at("words").size() == 2);
    REQUIRE(j.at("levels").size() == 1);
    CHECK(j.at("levels")[0].at("level") == 1);
  }
}
