// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "gha/trainer.hpp"

namespace gha::train {

namespace {

constexpr char kMagic[4] = {'G', 'H', 'A', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error(std::string("ghac: truncated file reading ") + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_blob(std::ostream& os, const std::vector<float>& v) {
  for (float f : v) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(os, bits);
  }
}

std::vector<float> get_blob(std::istream& is, std::size_t n) {
  std::vector<float> v(n);
  for (auto& f : v) {
    std::uint32_t bits = get_u32(is, "blob payload");
    std::memcpy(&f, &bits, 4);
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  nlohmann::json dir = nlohmann::json::array();
  std::size_t offset = 0;
  auto add_entry = [&](const std::string& name, std::size_t n) {
    dir.push_back({{"name", name}, {"count", n}, {"offset", offset}});
    offset += n;
  };
  for (const auto& [name, data] : ck.params) add_entry(name, data.size());
  if (ck.has_moments) {
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
      add_entry("adam.m." + ck.params[i].first, ck.m[i].size());
      add_entry("adam.v." + ck.params[i].first, ck.v[i].size());
    }
  }
  nlohmann::json header{{"format_version", kVersion},
                        {"config", ck.config.to_json()},
                        {"vocab", ck.vocab.to_json()},
                        {"step", ck.step},
                        {"epoch", ck.epoch},
                        {"examples_seen", ck.examples_seen},
                        {"metrics", ck.metrics},
                        {"adam_t", ck.step},
                        {"has_moments", ck.has_moments},
                        {"blobs", dir}};
  const std::string header_str = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("ghac: cannot write " + path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(header_str.size()));
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& [name, data] : ck.params) put_blob(os, data);
  if (ck.has_moments)
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
      put_blob(os, ck.m[i]);
      put_blob(os, ck.v[i]);
    }
  if (!os) throw std::runtime_error("ghac: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("ghac: cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4)) throw std::runtime_error("ghac: truncated file reading magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("ghac: bad magic in " + path);
  const std::uint32_t version = get_u32(is, "version");
  if (version != kVersion)
    throw std::runtime_error("ghac: unsupported version " + std::to_string(version));
  const std::uint32_t header_len = get_u32(is, "header length");
  std::string header_str(header_len, '\0');
  if (!is.read(header_str.data(), header_len))
    throw std::runtime_error("ghac: truncated file reading header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("ghac: bad header JSON: ") + e.what());
  }

  Checkpoint ck;
  ck.config = model::ModelConfig::from_json(header.at("config"));
  ck.vocab = corpus::Vocabulary::from_json(header.at("vocab"));
  ck.step = header.at("step").get<std::int64_t>();
  ck.epoch = header.at("epoch").get<std::int64_t>();
  ck.examples_seen = header.at("examples_seen").get<std::int64_t>();
  ck.metrics = header.at("metrics");
  ck.has_moments = header.at("has_moments").get<bool>();

  // blobs are stored in directory order
  for (const auto& entry : header.at("blobs")) {
    const auto name = entry.at("name").get<std::string>();
    const auto count = entry.at("count").get<std::size_t>();
    auto data = get_blob(is, count);
    if (name.rfind("adam.m.", 0) == 0)
      ck.m.push_back(std::move(data));
    else if (name.rfind("adam.v.", 0) == 0)
      ck.v.push_back(std::move(data));
    else
      ck.params.emplace_back(name, std::move(data));
  }
  return ck;
}

Checkpoint snapshot(const model::Model<float>& m, const corpus::Vocabulary& vocab,
                    const AdamState* opt, std::int64_t step, std::int64_t epoch,
                    std::int64_t examples_seen, nlohmann::json metrics) {
  Checkpoint ck;
  ck.config = m.config();
  ck.vocab = vocab;
  ck.step = step;
  ck.epoch = epoch;
  ck.examples_seen = examples_seen;
  ck.metrics = std::move(metrics);
  for (const auto& p : m.parameters())
    ck.params.emplace_back(p.name, std::vector<float>(p.tensor.data().begin(), p.tensor.data().end()));
  if (opt != nullptr) {
    ck.has_moments = true;
    ck.m = opt->m;
    ck.v = opt->v;
  }
  return ck;
}

model::Model<float> restore_model(const Checkpoint& ck) {
  model::Model<float> m(ck.config, /*init_seed=*/0);
  std::size_t used = 0;
  for (auto& p : m.parameters()) {
    const std::vector<float>* found = nullptr;
    for (const auto& [name, data] : ck.params)
      if (name == p.name) {
        if (found != nullptr) throw std::runtime_error("ghac: duplicate parameter " + name);
        found = &data;
      }
    if (found == nullptr) throw std::runtime_error("ghac: missing parameter " + p.name);
    if (found->size() != p.tensor.size())
      throw std::runtime_error("ghac: shape conflict for " + p.name + " (got " +
                               std::to_string(found->size()) + " values, expected " +
                               std::to_string(p.tensor.size()) + ")");
    std::copy(found->begin(), found->end(), p.tensor.data().begin());
    ++used;
  }
  if (used != ck.params.size())
    throw std::runtime_error("ghac: checkpoint carries parameters unknown to this model");
  return m;
}

}  // namespace gha::train
