// SPDX-License-Identifier: Apache-2.0

#include "gha/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace gha::corpus {

std::vector<DatasetItem> load_manifest(const std::string& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is) throw std::runtime_error("manifest: cannot open " + manifest_path);
  const auto base = std::filesystem::path(manifest_path).parent_path();
  std::vector<DatasetItem> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("manifest: bad JSON at line " + std::to_string(lineno) + ": " + e.what());
    }
    DatasetItem item;
    item.id = j.at("id").get<std::string>();
    item.captions = j.at("captions").get<std::vector<std::string>>();
    const auto rel = j.at("features").get<std::string>();
    item.features = read_ghaf((base / rel).string());
    items.push_back(std::move(item));
  }
  return items;
}

void write_manifest(const std::string& manifest_path, const std::vector<ManifestRecord>& records) {
  std::ofstream os(manifest_path, std::ios::trunc);
  if (!os) throw std::runtime_error("manifest: cannot write " + manifest_path);
  for (const auto& r : records) {
    nlohmann::json j{{"id", r.id}, {"features", r.features}, {"captions", r.captions}};
    os << j.dump() << "\n";
  }
}

std::vector<int> encode_caption(const Vocabulary& vocab, const std::string& caption,
                                std::size_t max_len) {
  if (max_len < 2) throw std::invalid_argument("encode_caption: max_len must be >= 2");
  std::vector<int> ids = vocab.encode(caption);
  if (ids.size() > max_len - 2) ids.resize(max_len - 2);
  std::vector<int> out;
  out.reserve(ids.size() + 2);
  out.push_back(Vocabulary::kStart);
  out.insert(out.end(), ids.begin(), ids.end());
  out.push_back(Vocabulary::kEnd);
  return out;
}

std::vector<EncodedExample> encode_dataset(const std::vector<DatasetItem>& items,
                                           const Vocabulary& vocab, std::size_t max_len) {
  std::vector<EncodedExample> out;
  for (std::size_t i = 0; i < items.size(); ++i)
    for (const auto& caption : items[i].captions)
      out.push_back({i, encode_caption(vocab, caption, max_len)});
  return out;
}

std::vector<CaptionBatch> make_batches(const std::vector<EncodedExample>& examples,
                                       std::size_t batch_size, std::uint64_t shuffle_seed) {
  if (batch_size == 0) throw std::invalid_argument("make_batches: batch_size must be >= 1");
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (shuffle_seed != 0) {
    std::mt19937_64 rng(shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }

  std::vector<CaptionBatch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    CaptionBatch batch;
    for (std::size_t i = start; i < end; ++i)
      batch.T = std::max(batch.T, examples[order[i]].tokens.size());
    for (std::size_t i = start; i < end; ++i) {
      const auto& ex = examples[order[i]];
      std::vector<int> row(batch.T, Vocabulary::kPad);
      std::copy(ex.tokens.begin(), ex.tokens.end(), row.begin());
      std::vector<std::uint8_t> m(batch.T, 0);
      for (std::size_t t = 1; t < batch.T; ++t) m[t] = row[t] != Vocabulary::kPad;
      batch.item_index.push_back(ex.item);
      batch.tokens.push_back(std::move(row));
      batch.mask.push_back(std::move(m));
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace gha::corpus
