// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface: gen-data | train | caption | evaluate | inspect |
// grad-check. Every command exits 0 on success and prints a one-line
// machine-parsable error otherwise.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gha/dataset.hpp"
#include "gha/infer.hpp"
#include "gha/kernels.hpp"
#include "gha/selfcheck.hpp"
#include "gha/synthetic.hpp"
#include "gha/trainer.hpp"
#include "gha/viz.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void apply_kernel_choice(const std::string& choice) {
  if (choice == "auto" || choice.empty()) return;
  if (choice == "scalar")
    gha::kernels::set_backend(gha::kernels::Backend::scalar);
  else if (choice == "simd")
    gha::kernels::set_backend(gha::kernels::Backend::simd);
  else
    throw std::invalid_argument("unknown --kernels value: " + choice);
}

int cmd_gen_data(std::uint64_t seed, int n_train, int n_test, int grid_w, int grid_h,
                 int max_objects, const std::string& out_dir) {
  gha::corpus::SyntheticConfig cfg;
  cfg.seed = seed;
  cfg.n_scenes = n_train + n_test;
  cfg.grid_w = grid_w;
  cfg.grid_h = grid_h;
  cfg.max_objects = max_objects;
  auto scenes = gha::corpus::generate_synthetic(cfg);

  fs::create_directories(fs::path(out_dir) / "features");
  std::vector<gha::corpus::ManifestRecord> train_records, test_records;
  for (int i = 0; i < cfg.n_scenes; ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "scene_%05d", i);
    const std::string rel = std::string("features/") + name + ".ghaf";
    gha::corpus::write_ghaf((fs::path(out_dir) / rel).string(), scenes[static_cast<std::size_t>(i)].features);
    gha::corpus::ManifestRecord rec{name, rel, {scenes[static_cast<std::size_t>(i)].caption}};
    (i < n_train ? train_records : test_records).push_back(std::move(rec));
  }
  gha::corpus::write_manifest((fs::path(out_dir) / "train.jsonl").string(), train_records);
  gha::corpus::write_manifest((fs::path(out_dir) / "test.jsonl").string(), test_records);
  std::fprintf(stderr, "wrote %d train / %d test scenes under %s\n", n_train, n_test, out_dir.c_str());
  return 0;
}

int cmd_train(gha::train::TrainConfig cfg, const std::string& train_manifest,
              const std::string& val_manifest, const std::string& resume) {
  auto train_items = gha::corpus::load_manifest(train_manifest);
  std::vector<gha::corpus::DatasetItem> val_items;
  if (!val_manifest.empty()) val_items = gha::corpus::load_manifest(val_manifest);

  std::ofstream metrics;
  std::ostream* metrics_stream = nullptr;
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    metrics.open(cfg.out_dir + "/metrics.jsonl", resume.empty() ? std::ios::trunc : std::ios::app);
    metrics_stream = &metrics;
  }
  auto result = gha::train::train(cfg, train_items, val_items, resume, metrics_stream);
  std::fprintf(stderr, "trained %lld steps, final loss %.5f, best val BLEU-4 %.4f (epoch %d)\n",
               static_cast<long long>(result.steps), result.final_loss, result.best_val_bleu4,
               result.best_epoch);
  if (!result.best_path.empty())
    std::fprintf(stderr, "checkpoints: %s, %s\n", result.best_path.c_str(), result.last_path.c_str());
  return 0;
}

json caption_one(const gha::model::Model<float>& m, const gha::corpus::Vocabulary& vocab,
                 const gha::corpus::FeatureMaps& fm, const std::string& id, std::size_t beam,
                 std::size_t max_len) {
  auto scorer = gha::infer::model_scorer(m, fm);
  auto res = beam == 1 ? gha::infer::greedy(scorer, vocab.size(), max_len)
                       : gha::infer::beam_search(scorer, vocab.size(), beam, max_len);
  return json{{"id", id}, {"caption", vocab.decode(res.tokens)}, {"logprob", res.sum_logprob}};
}

int cmd_caption(const std::string& checkpoint, const std::string& features,
                const std::string& manifest, std::size_t beam, std::size_t max_len) {
  auto ck = gha::train::load_checkpoint(checkpoint);
  auto m = gha::train::restore_model(ck);
  if (!features.empty()) {
    auto fm = gha::corpus::read_ghaf(features);
    std::cout << caption_one(m, ck.vocab, fm, fs::path(features).stem().string(), beam, max_len).dump()
              << "\n";
  }
  if (!manifest.empty())
    for (const auto& item : gha::corpus::load_manifest(manifest))
      std::cout << caption_one(m, ck.vocab, item.features, item.id, beam, max_len).dump() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& manifest, std::size_t beam,
                 std::size_t max_len) {
  auto ck = gha::train::load_checkpoint(checkpoint);
  auto m = gha::train::restore_model(ck);
  auto items = gha::corpus::load_manifest(manifest);
  auto eval = gha::infer::evaluate_bleu(m, items, ck.vocab, beam, max_len);
  json out{{"n", eval.items},
           {"bleu1", eval.scores.bleu[0]},
           {"bleu2", eval.scores.bleu[1]},
           {"bleu3", eval.scores.bleu[2]},
           {"bleu4", eval.scores.bleu[3]},
           {"brevity_penalty", eval.scores.brevity_penalty}};
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_inspect(const std::string& checkpoint, const std::string& features, std::size_t beam,
                std::size_t max_len, const std::string& out_dir, double thr_visual,
                double thr_concept, bool nearest, std::size_t target_w, std::size_t target_h) {
  auto ck = gha::train::load_checkpoint(checkpoint);
  auto m = gha::train::restore_model(ck);
  auto fm = gha::corpus::read_ghaf(features);
  fs::create_directories(out_dir);

  auto scorer = gha::infer::model_scorer(m, fm);
  auto decoded = beam == 1 ? gha::infer::greedy(scorer, ck.vocab.size(), max_len)
                           : gha::infer::beam_search(scorer, ck.vocab.size(), beam, max_len);

  // re-run the full sequence with diagnostics; input row t predicts word t
  std::vector<int> input = {gha::corpus::Vocabulary::kStart};
  for (int tok : decoded.tokens)
    if (tok != gha::corpus::Vocabulary::kEnd) input.push_back(tok);
  gha::model::RunOptions opt;
  opt.want_diagnostics = true;
  auto fwd = m.forward(fm, input, nullptr, opt);

  std::vector<std::string> words;
  for (int tok : decoded.tokens) words.push_back(ck.vocab.token(tok));

  for (const auto& lv : fwd.diag.levels) {
    if (lv.attention.empty()) continue;
    const std::size_t cells = lv.w * lv.h;
    for (std::size_t t = 0; t < fwd.diag.t; ++t) {
      char stem[64];
      std::snprintf(stem, sizeof stem, "attn_l%d_t%02zu", lv.level, t);
      gha::viz::export_attention(
          std::span<const float>(lv.attention.data() + t * cells, cells), lv.w, lv.h, target_w,
          target_h, (fs::path(out_dir) / (std::string(stem) + ".pgm")).string(),
          (fs::path(out_dir) / (std::string(stem) + ".json")).string(), !nearest);
    }
  }

  gha::viz::GateThresholds thresholds{thr_visual, thr_concept};
  auto stats = gha::viz::gate_report(fwd.diag, thresholds);
  std::ofstream gates(fs::path(out_dir) / "gates.json");
  gates << gha::viz::gate_report_json(stats, words, thresholds).dump(2) << "\n";

  json caption{{"caption", ck.vocab.decode(decoded.tokens)},
               {"logprob", decoded.sum_logprob},
               {"words", words}};
  std::ofstream cap(fs::path(out_dir) / "caption.json");
  cap << caption.dump(2) << "\n";
  std::cout << caption.dump() << "\n";
  return 0;
}

int cmd_grad_check(const std::string& variant, bool desk, std::uint64_t seed, double tolerance) {
  auto summary = gha::selfcheck::run_model_gradcheck(variant, desk, seed, tolerance);
  for (const auto& pc : summary.params)
    std::printf("%-24s max-rel %.3e %s\n", pc.name.c_str(), pc.max_rel, pc.pass ? "pass" : "FAIL");
  std::printf("gradient check %s: max rel err %.3e (tolerance %.1e)\n",
              summary.pass ? "PASSED" : "FAILED", summary.max_rel, tolerance);
  return summary.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gated hierarchical attention captioner"};
  app.require_subcommand(1);
  std::string kernels = "auto";
  app.add_option("--kernels", kernels, "kernel backend: auto|scalar|simd");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic scene dataset");
  std::uint64_t gen_seed = 0;
  int n_train = 2000, n_test = 200, grid_w = 3, grid_h = 3, max_objects = 3;
  std::string gen_out = "data";
  gen->add_option("--seed", gen_seed);
  gen->add_option("--n-train", n_train);
  gen->add_option("--n-test", n_test);
  gen->add_option("--grid-w", grid_w);
  gen->add_option("--grid-h", grid_h);
  gen->add_option("--max-objects", max_objects);
  gen->add_option("--out", gen_out)->required();

  // train
  auto* tr = app.add_subcommand("train", "train a captioning model");
  std::string tr_config, tr_train, tr_val, tr_resume;
  gha::train::TrainConfig tcfg;
  bool tr_desk = false, tr_check_invariants = false;
  tr->add_option("--config", tr_config, "JSON config file; flags override");
  auto* o_variant = tr->add_option("--variant", tcfg.variant);
  auto* o_desk = tr->add_flag("--desk", tr_desk, "desk-scale preset");
  auto* o_seed = tr->add_option("--seed", tcfg.seed);
  auto* o_epochs = tr->add_option("--epochs", tcfg.epochs);
  auto* o_steps = tr->add_option("--max-steps", tcfg.max_steps);
  auto* o_batch = tr->add_option("--batch", tcfg.batch_size);
  auto* o_lre = tr->add_option("--lr-encoder", tcfg.lr_encoder);
  auto* o_lrr = tr->add_option("--lr-rest", tcfg.lr_rest);
  auto* o_clip = tr->add_option("--clip-norm", tcfg.clip_norm);
  auto* o_maxlen = tr->add_option("--max-len", tcfg.max_len);
  auto* o_minc = tr->add_option("--min-count", tcfg.min_count);
  auto* o_beam = tr->add_option("--beam", tcfg.beam_width);
  auto* o_keep = tr->add_option("--keep-prob", tcfg.keep_prob);
  auto* o_inv = tr->add_flag("--check-invariants", tr_check_invariants);
  tr->add_option("--train", tr_train, "training manifest")->required();
  tr->add_option("--val", tr_val, "validation manifest");
  tr->add_option("--out", tcfg.out_dir, "checkpoint directory");
  tr->add_option("--resume", tr_resume, "checkpoint to continue from");

  // caption
  auto* cap = app.add_subcommand("caption", "caption feature files");
  std::string cap_ck, cap_features, cap_manifest;
  std::size_t cap_beam = 3, cap_maxlen = 20;
  cap->add_option("--checkpoint", cap_ck)->required();
  cap->add_option("--features", cap_features, "a single GHAF file");
  cap->add_option("--manifest", cap_manifest, "caption every item of a manifest");
  cap->add_option("--beam", cap_beam);
  cap->add_option("--max-len", cap_maxlen);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "BLEU against reference captions");
  std::string ev_ck, ev_manifest;
  std::size_t ev_beam = 3, ev_maxlen = 20;
  ev->add_option("--checkpoint", ev_ck)->required();
  ev->add_option("--manifest", ev_manifest)->required();
  ev->add_option("--beam", ev_beam);
  ev->add_option("--max-len", ev_maxlen);

  // inspect
  auto* ins = app.add_subcommand("inspect", "export attention maps and gate statistics");
  std::string ins_ck, ins_features, ins_out = "inspect-out", ins_thresholds = "0.65,0.25";
  std::size_t ins_beam = 3, ins_maxlen = 20, ins_tw = 224, ins_th = 224;
  bool ins_nearest = false;
  ins->add_option("--checkpoint", ins_ck)->required();
  ins->add_option("--features", ins_features)->required();
  ins->add_option("--out", ins_out);
  ins->add_option("--beam", ins_beam);
  ins->add_option("--max-len", ins_maxlen);
  ins->add_option("--thresholds", ins_thresholds, "visual,concept gate thresholds");
  ins->add_option("--target-w", ins_tw);
  ins->add_option("--target-h", ins_th);
  ins->add_flag("--nearest", ins_nearest, "nearest-neighbor upsampling instead of bilinear");

  // grad-check
  auto* gc = app.add_subcommand("grad-check", "finite-difference check of the full model");
  std::string gc_variant = "GHA-2-3-desk";
  std::uint64_t gc_seed = 7;
  double gc_tol = 1e-4;
  bool gc_desk = false;
  gc->add_option("--variant", gc_variant);
  gc->add_flag("--desk", gc_desk);
  gc->add_option("--seed", gc_seed);
  gc->add_option("--tolerance", gc_tol);

  CLI11_PARSE(app, argc, argv);

  try {
    apply_kernel_choice(kernels);
    if (gen->parsed())
      return cmd_gen_data(gen_seed, n_train, n_test, grid_w, grid_h, max_objects, gen_out);
    if (tr->parsed()) {
      gha::train::TrainConfig cfg;
      if (!tr_config.empty()) {
        std::ifstream is(tr_config);
        if (!is) throw std::runtime_error("cannot open config " + tr_config);
        cfg = gha::train::TrainConfig::from_json(json::parse(is));
      }
      if (cfg.desk || tr_desk) {
        cfg.desk = true;
        cfg.apply_desk_defaults();
      }
      // explicit flags override the config file (and desk defaults)
      if (o_variant->count()) cfg.variant = tcfg.variant;
      if (o_seed->count()) cfg.seed = tcfg.seed;
      if (o_epochs->count()) cfg.epochs = tcfg.epochs;
      if (o_steps->count()) cfg.max_steps = tcfg.max_steps;
      if (o_batch->count()) cfg.batch_size = tcfg.batch_size;
      if (o_lre->count()) cfg.lr_encoder = tcfg.lr_encoder;
      if (o_lrr->count()) cfg.lr_rest = tcfg.lr_rest;
      if (o_clip->count()) cfg.clip_norm = tcfg.clip_norm;
      if (o_maxlen->count()) cfg.max_len = tcfg.max_len;
      if (o_minc->count()) cfg.min_count = tcfg.min_count;
      if (o_beam->count()) cfg.beam_width = tcfg.beam_width;
      if (o_keep->count()) cfg.keep_prob = tcfg.keep_prob;
      if (o_inv->count()) cfg.check_invariants = tr_check_invariants;
      if (o_desk->count() && !cfg.desk) {
        cfg.desk = true;
        cfg.apply_desk_defaults();
      }
      if (!tcfg.out_dir.empty()) cfg.out_dir = tcfg.out_dir;
      return cmd_train(cfg, tr_train, tr_val, tr_resume);
    }
    if (cap->parsed()) {
      if (cap_features.empty() && cap_manifest.empty())
        throw std::invalid_argument("caption: need --features or --manifest");
      return cmd_caption(cap_ck, cap_features, cap_manifest, cap_beam, cap_maxlen);
    }
    if (ev->parsed()) return cmd_evaluate(ev_ck, ev_manifest, ev_beam, ev_maxlen);
    if (ins->parsed()) {
      double tv = 0.65, tc = 0.25;
      if (std::sscanf(ins_thresholds.c_str(), "%lf,%lf", &tv, &tc) != 2)
        throw std::invalid_argument("inspect: --thresholds expects \"visual,concept\"");
      return cmd_inspect(ins_ck, ins_features, ins_beam, ins_maxlen, ins_out, tv, tc, ins_nearest,
                         ins_tw, ins_th);
    }
    if (gc->parsed()) return cmd_grad_check(gc_variant, gc_desk, gc_seed, gc_tol);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
