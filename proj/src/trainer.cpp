// SPDX-License-Identifier: Apache-2.0

#include "gha/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "gha/infer.hpp"
#include "gha/rng.hpp"

namespace gha::train {

void adam_update(std::span<float> param, std::span<const float> grad, std::span<float> m,
                 std::span<float> v, double lr, double beta1, double beta2, double eps,
                 std::int64_t t) {
  ag::require(t >= 1, "adam_update: step counter must be >= 1");
  ag::require(param.size() == grad.size() && param.size() == m.size() && param.size() == v.size(),
              "adam_update: buffer sizes differ");
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double mi = beta1 * m[i] + (1.0 - beta1) * g;
    const double vi = beta2 * v[i] + (1.0 - beta2) * g * g;
    m[i] = static_cast<float>(mi);
    v[i] = static_cast<float>(vi);
    const double mhat = mi / bc1;
    const double vhat = vi / bc2;
    param[i] = static_cast<float>(param[i] - lr * mhat / (std::sqrt(vhat) + eps));
  }
}

nlohmann::json TrainConfig::to_json() const {
  return nlohmann::json{{"variant", variant},
                        {"desk", desk},
                        {"seed", seed},
                        {"epochs", epochs},
                        {"max_steps", max_steps},
                        {"batch_size", batch_size},
                        {"lr_encoder", lr_encoder},
                        {"lr_rest", lr_rest},
                        {"beta1", beta1},
                        {"beta2", beta2},
                        {"eps", eps},
                        {"clip_norm", clip_norm},
                        {"max_len", max_len},
                        {"min_count", min_count},
                        {"beam_width", beam_width},
                        {"keep_prob", keep_prob},
                        {"check_invariants", check_invariants},
                        {"out_dir", out_dir}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
  };
  get("variant", cfg.variant);
  get("desk", cfg.desk);
  get("seed", cfg.seed);
  get("epochs", cfg.epochs);
  get("max_steps", cfg.max_steps);
  get("batch_size", cfg.batch_size);
  get("lr_encoder", cfg.lr_encoder);
  get("lr_rest", cfg.lr_rest);
  get("beta1", cfg.beta1);
  get("beta2", cfg.beta2);
  get("eps", cfg.eps);
  get("clip_norm", cfg.clip_norm);
  get("max_len", cfg.max_len);
  get("min_count", cfg.min_count);
  get("beam_width", cfg.beam_width);
  get("keep_prob", cfg.keep_prob);
  get("check_invariants", cfg.check_invariants);
  get("out_dir", cfg.out_dir);
  return cfg;
}

// Desk corpora are tiny: keep every word and move faster than the
// full-scale rates, which assume a pretrained encoder.
void TrainConfig::apply_desk_defaults() {
  min_count = 1;
  lr_rest = 1e-3;
  lr_encoder = 1e-4;
}

namespace {

struct MetricsWriter {
  std::ostream* stream = nullptr;
  void line(std::int64_t step, int epoch, const char* split, double loss, double bleu4) {
    if (stream == nullptr) return;
    nlohmann::json j{{"step", step}, {"epoch", epoch}, {"split", split}, {"loss", loss}};
    j["bleu4"] = bleu4 >= 0 ? nlohmann::json(bleu4) : nlohmann::json(nullptr);
    (*stream) << j.dump() << "\n";
  }
};

double validation_loss(const model::Model<float>& m,
                       const std::vector<corpus::DatasetItem>& items,
                       const std::vector<corpus::EncodedExample>& examples) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& ex : examples) {
    const auto& tokens = ex.tokens;
    std::vector<int> input(tokens.begin(), tokens.end() - 1);
    std::vector<int> targets(tokens.begin() + 1, tokens.end());
    std::vector<std::uint8_t> mask(targets.size(), 1);
    auto res = m.forward(items[ex.item].features, input, nullptr, {});
    auto loss = m.loss(nullptr, res.logits, targets, mask);
    total += loss.item() * static_cast<double>(targets.size());
    count += targets.size();
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<corpus::DatasetItem>& train_items,
                  const std::vector<corpus::DatasetItem>& val_items, const std::string& resume_from,
                  std::ostream* metrics_stream) {
  ag::require(!train_items.empty(), "train: empty training set");
  ag::require(cfg.epochs >= 1, "train: epochs must be >= 1");
  ag::require(cfg.lr_encoder > 0 && cfg.lr_rest > 0, "train: learning rates must be positive");

  TrainResult result;
  MetricsWriter metrics{metrics_stream};

  corpus::Vocabulary vocab;
  std::shared_ptr<model::Model<float>> m;
  AdamState opt;
  std::int64_t start_epoch = 0;
  std::int64_t examples_seen = 0;

  if (!resume_from.empty()) {
    Checkpoint ck = load_checkpoint(resume_from);
    vocab = ck.vocab;
    m = std::make_shared<model::Model<float>>(restore_model(ck));
    if (!ck.has_moments) throw std::runtime_error("train: checkpoint has no optimizer state to resume");
    opt.m = ck.m;
    opt.v = ck.v;
    opt.t = ck.step;
    start_epoch = ck.epoch;
    examples_seen = ck.examples_seen;
  } else {
    std::vector<std::string> captions;
    for (const auto& item : train_items)
      for (const auto& c : item.captions) captions.push_back(c);
    vocab = corpus::Vocabulary::build(captions, cfg.min_count);
    model::ModelConfig mc = model::build_variant(cfg.variant, cfg.desk);
    mc.vocab_size = vocab.size();
    mc.keep_prob = cfg.keep_prob;
    m = std::make_shared<model::Model<float>>(mc, cfg.seed);
    for (const auto& p : m->parameters()) {
      opt.m.emplace_back(p.tensor.size(), 0.0f);
      opt.v.emplace_back(p.tensor.size(), 0.0f);
    }
  }

  const auto train_examples = corpus::encode_dataset(train_items, vocab, cfg.max_len);
  const auto val_examples = corpus::encode_dataset(val_items, vocab, cfg.max_len);

  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
  const std::string best_path = cfg.out_dir.empty() ? "" : cfg.out_dir + "/best.ghac";
  const std::string last_path = cfg.out_dir.empty() ? "" : cfg.out_dir + "/last.ghac";

  result.vocab = vocab;
  result.best_val_bleu4 = -1.0;
  bool stop = false;

  for (std::int64_t epoch = start_epoch; epoch < cfg.epochs && !stop; ++epoch) {
    const std::uint64_t shuffle_seed =
        rng::hash_combine(cfg.seed, static_cast<std::uint64_t>(epoch) + 1) | 1ULL;
    auto batches = corpus::make_batches(train_examples, cfg.batch_size, shuffle_seed);
    for (const auto& batch : batches) {
      ag::Tape<float> tape;
      // per-token mean over the whole batch: weight each item's mean loss
      // by its token share
      std::size_t batch_tokens = 0;
      std::vector<std::size_t> item_tokens(batch.tokens.size());
      for (std::size_t b = 0; b < batch.tokens.size(); ++b) {
        std::size_t count = 0;
        for (std::size_t t = 1; t < batch.T; ++t)
          if (batch.mask[b][t]) ++count;
        item_tokens[b] = count;
        batch_tokens += count;
      }
      ag::Tensor<float> total;
      for (std::size_t b = 0; b < batch.tokens.size(); ++b) {
        if (item_tokens[b] == 0) continue;
        const auto& row = batch.tokens[b];
        std::vector<int> input(row.begin(), row.end() - 1);
        std::vector<int> targets(row.begin() + 1, row.end());
        std::vector<std::uint8_t> mask(batch.mask[b].begin() + 1, batch.mask[b].end());
        model::RunOptions opt_run;
        opt_run.training = true;
        opt_run.dropout_seed = cfg.seed;
        opt_run.step = static_cast<std::uint64_t>(examples_seen++);
        opt_run.want_diagnostics = cfg.check_invariants;
        auto fwd = m->forward(train_items[batch.item_index[b]].features, input, &tape, opt_run);
        if (cfg.check_invariants) {
          const auto rep = model::check_diagnostics(fwd.diag);
          result.invariant_report.attention += rep.attention;
          result.invariant_report.hull += rep.hull;
          result.invariant_report.fusing += rep.fusing;
          result.invariant_report.gates += rep.gates;
          result.invariant_violations += rep.total();
        }
        auto item_loss = m->loss(&tape, fwd.logits, targets, mask);
        auto weighted = ag::scalar_mul(&tape, item_loss,
                                       static_cast<float>(item_tokens[b]) / static_cast<float>(batch_tokens));
        total = total.defined() ? ag::add(&tape, total, weighted) : weighted;
      }
      if (!total.defined()) continue;  // batch of empty captions
      const double loss_value = total.item();
      if (!std::isfinite(loss_value))
        throw std::runtime_error("train: non-finite loss at step " + std::to_string(opt.t + 1));
      for (auto& p : m->parameters()) p.tensor.zero_grad();
      tape.backward(total);

      if (cfg.clip_norm > 0.0) {
        double norm_sq = 0.0;
        for (auto& p : m->parameters())
          for (float g : p.tensor.grad_view()) norm_sq += static_cast<double>(g) * g;
        const double norm = std::sqrt(norm_sq);
        if (norm > cfg.clip_norm) {
          const float scale = static_cast<float>(cfg.clip_norm / norm);
          for (auto& p : m->parameters())
            for (float& g : p.tensor.grad()) g *= scale;
        }
      }

      ++opt.t;
      auto& params = m->parameters();
      for (std::size_t i = 0; i < params.size(); ++i) {
        auto grad = params[i].tensor.grad();  // allocates zeros if untouched
        for (float g : grad)
          if (!std::isfinite(g))
            throw std::runtime_error("train: non-finite gradient in " + params[i].name + " at step " +
                                     std::to_string(opt.t));
        const double lr = params[i].group == model::ParamGroup::encoder ? cfg.lr_encoder : cfg.lr_rest;
        adam_update(params[i].tensor.data(), grad, opt.m[i], opt.v[i], lr, cfg.beta1, cfg.beta2,
                    cfg.eps, opt.t);
      }

      result.loss_history.push_back(static_cast<float>(loss_value));
      result.final_loss = loss_value;
      metrics.line(opt.t, static_cast<int>(epoch), "train", loss_value, -1);
      if (cfg.max_steps > 0 && opt.t >= cfg.max_steps) {
        stop = true;
        break;
      }
    }

    double val_loss = 0.0;
    double val_bleu = 0.0;
    if (!val_items.empty()) {
      val_loss = validation_loss(*m, val_items, val_examples);
      val_bleu = infer::evaluate_bleu(*m, val_items, vocab, cfg.beam_width, cfg.max_len).scores.bleu[3];
      metrics.line(opt.t, static_cast<int>(epoch), "val", val_loss, val_bleu);
      result.last_val_loss = val_loss;
    }
    if (val_items.empty() || val_bleu >= result.best_val_bleu4) {
      result.best_val_bleu4 = val_items.empty() ? 0.0 : val_bleu;
      result.best_epoch = static_cast<int>(epoch);
      result.best_model = std::make_shared<model::Model<float>>(
          restore_model(snapshot(*m, vocab, &opt, opt.t, epoch + 1, examples_seen, {})));
      if (!best_path.empty()) {
        nlohmann::json met{{"val_bleu4", val_bleu}, {"val_loss", val_loss}, {"epoch", epoch}};
        save_checkpoint(best_path, snapshot(*m, vocab, &opt, opt.t, epoch + 1, examples_seen, met));
      }
    }
    if (!last_path.empty()) {
      nlohmann::json met{{"val_bleu4", val_bleu}, {"val_loss", val_loss}, {"epoch", epoch}};
      save_checkpoint(last_path, snapshot(*m, vocab, &opt, opt.t, epoch + 1, examples_seen, met));
    }
  }

  result.steps = opt.t;
  result.best_path = best_path;
  result.last_path = last_path;
  result.model = m;
  return result;
}

}  // namespace gha::train
