// SPDX-License-Identifier: Apache-2.0

#include "gha/featuremaps.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gha::corpus {

namespace {

constexpr char kMagic[4] = {'G', 'H', 'A', 'F'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error(std::string("ghaf: truncated file reading ") + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, const float* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &v[i], 4);
    put_u32(os, bits);
  }
}

void get_f32(std::istream& is, float* v, std::size_t n, const char* what) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = get_u32(is, what);
    std::memcpy(&v[i], &bits, 4);
  }
}

}  // namespace

FeatureMaps read_ghaf(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("ghaf: cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4)) throw std::runtime_error("ghaf: truncated file reading magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("ghaf: bad magic in " + path);
  const std::uint32_t version = get_u32(is, "version");
  if (version != kVersion)
    throw std::runtime_error("ghaf: unsupported version " + std::to_string(version));
  const std::uint32_t n_grids = get_u32(is, "grid count");
  FeatureMaps fm;
  fm.grids.resize(n_grids);
  for (auto& g : fm.grids) {
    g.w = get_u32(is, "grid width");
    g.h = get_u32(is, "grid height");
    g.channels = get_u32(is, "grid channels");
    if (g.w == 0 || g.h == 0 || g.channels == 0)
      throw std::runtime_error("ghaf: zero grid extent in " + path);
    g.data.resize(g.w * g.h * g.channels);
    get_f32(is, g.data.data(), g.data.size(), "grid payload");
  }
  return fm;
}

void write_ghaf(const std::string& path, const FeatureMaps& fm) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("ghaf: cannot write " + path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(fm.grids.size()));
  for (const auto& g : fm.grids) {
    put_u32(os, static_cast<std::uint32_t>(g.w));
    put_u32(os, static_cast<std::uint32_t>(g.h));
    put_u32(os, static_cast<std::uint32_t>(g.channels));
    put_f32(os, g.data.data(), g.data.size());
  }
  if (!os) throw std::runtime_error("ghaf: write failed for " + path);
}

}  // namespace gha::corpus
