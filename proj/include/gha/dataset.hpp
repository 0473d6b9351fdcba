// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_DATASET_HPP_
#define GHA_DATASET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "gha/featuremaps.hpp"
#include "gha/vocab.hpp"

namespace gha::corpus {

struct DatasetItem {
  std::string id;
  FeatureMaps features;
  std::vector<std::string> captions;
};

// JSON-lines manifest, one record per image:
//   {"id": "...", "features": "<relative path>", "captions": ["...", ...]}
// Feature paths resolve relative to the manifest's directory.
std::vector<DatasetItem> load_manifest(const std::string& manifest_path);

struct ManifestRecord {
  std::string id;
  std::string features;  // relative path
  std::vector<std::string> captions;
};
void write_manifest(const std::string& manifest_path, const std::vector<ManifestRecord>& records);

// One training example: a (scene, caption) pair encoded as
// <start> w1..wn <end> and the index of the item providing the features.
struct EncodedExample {
  std::size_t item = 0;
  std::vector<int> tokens;
};

// Encodes with <start>/<end>, truncating so the total length stays within
// max_len tokens.
std::vector<int> encode_caption(const Vocabulary& vocab, const std::string& caption,
                                std::size_t max_len);

std::vector<EncodedExample> encode_dataset(const std::vector<DatasetItem>& items,
                                           const Vocabulary& vocab, std::size_t max_len);

// Token matrix [B, T] padded with <pad>; mask[b][t] is true exactly on
// non-<pad> target positions (t >= 1).
struct CaptionBatch {
  std::size_t T = 0;
  std::vector<std::size_t> item_index;          // feature reference per row
  std::vector<std::vector<int>> tokens;         // B rows of length T
  std::vector<std::vector<std::uint8_t>> mask;  // aligned with tokens
};

// Deterministic order for a given shuffle_seed; seed 0 keeps input order.
std::vector<CaptionBatch> make_batches(const std::vector<EncodedExample>& examples,
                                       std::size_t batch_size, std::uint64_t shuffle_seed);

}  // namespace gha::corpus

#endif  // GHA_DATASET_HPP_
