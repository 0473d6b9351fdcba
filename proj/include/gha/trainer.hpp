// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_TRAINER_HPP_
#define GHA_TRAINER_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gha/dataset.hpp"
#include "gha/model.hpp"
#include "gha/vocab.hpp"

namespace gha::train {

// Bias-corrected Adam on one tensor; the routing into learning-rate groups
// happens above this.
void adam_update(std::span<float> param, std::span<const float> grad, std::span<float> m,
                 std::span<float> v, double lr, double beta1, double beta2, double eps,
                 std::int64_t t);

struct AdamState {
  std::vector<std::vector<float>> m, v;  // aligned with model parameter order
  std::int64_t t = 0;
};

// GHAC checkpoint: magic "GHAC", u32 version = 1, u32 header length, JSON
// header (config, vocab, blob directory), then little-endian f32 blobs.
struct Checkpoint {
  model::ModelConfig config;
  corpus::Vocabulary vocab;
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  std::int64_t examples_seen = 0;
  nlohmann::json metrics;
  std::vector<std::pair<std::string, std::vector<float>>> params;
  bool has_moments = false;
  std::vector<std::vector<float>> m, v;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint snapshot(const model::Model<float>& m, const corpus::Vocabulary& vocab,
                    const AdamState* opt, std::int64_t step, std::int64_t epoch,
                    std::int64_t examples_seen, nlohmann::json metrics);
// builds a model from the checkpoint config and restores every parameter;
// missing names or shape conflicts are errors
model::Model<float> restore_model(const Checkpoint& ck);

struct TrainConfig {
  std::string variant = "GHA-6-3";
  bool desk = false;
  std::uint64_t seed = 0;
  int epochs = 50;
  std::int64_t max_steps = 0;  // 0 = no cap
  std::size_t batch_size = 16;
  double lr_encoder = 1e-5;
  double lr_rest = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;  // 0 disables; stabilizer for deep decoders
  std::size_t max_len = 20;
  int min_count = 6;
  std::size_t beam_width = 3;
  double keep_prob = 0.5;
  bool check_invariants = false;
  std::string out_dir;  // empty: keep everything in memory

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  void apply_desk_defaults();  // small-corpus vocabulary and learning rates
};

struct TrainResult {
  std::vector<float> loss_history;  // per-token training loss per step
  double final_loss = 0.0;
  double best_val_bleu4 = 0.0;
  double last_val_loss = 0.0;
  int best_epoch = -1;
  std::int64_t steps = 0;
  std::size_t invariant_violations = 0;
  model::InvariantReport invariant_report;
  std::string best_path, last_path;
  corpus::Vocabulary vocab;
  std::shared_ptr<model::Model<float>> model;       // state after the last step
  std::shared_ptr<model::Model<float>> best_model;  // best validation BLEU-4
};

// Deterministic per (seed, config, data) on a single thread. Aborts with a
// diagnostic on non-finite loss or gradients. `resume_from` continues a
// saved run (model, moments, counters, batch order).
TrainResult train(const TrainConfig& cfg, const std::vector<corpus::DatasetItem>& train_items,
                  const std::vector<corpus::DatasetItem>& val_items,
                  const std::string& resume_from = "", std::ostream* metrics_stream = nullptr);

}  // namespace gha::train

#endif  // GHA_TRAINER_HPP_
