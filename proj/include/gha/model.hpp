// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_MODEL_HPP_
#define GHA_MODEL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gha/attention.hpp"
#include "gha/decoder.hpp"
#include "gha/encoder.hpp"
#include "gha/featuremaps.hpp"
#include "gha/fusing.hpp"
#include "gha/init.hpp"
#include "gha/ops.hpp"

namespace gha::model {

enum class Family { baseline, gha, ms_gha };

const char* family_name(Family f);
Family family_from_string(const std::string& s);

enum class ParamGroup { encoder, rest };

struct ModelConfig {
  Family family = Family::gha;
  std::string label = "GHA-6-3";
  decoder::DecoderConfig dec;
  std::size_t visual_dim = 2048;   // dv after projection
  std::size_t hidden_dim = 512;    // dh of the fusing block
  std::size_t mlp_hidden = 4096;   // prediction MLP width
  double keep_prob = 0.5;
  std::size_t vocab_size = 0;
  bool share_attention = false;  // one score matrix for all levels
  bool share_fusing = true;      // one GRU parameter set for all levels

  // which grids of the feature file are used, their expected channel
  // counts, and the level -> used-grid assignment (size L+1)
  std::vector<std::size_t> grid_selector;
  std::vector<std::size_t> grid_channels;
  std::vector<std::size_t> assignment;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  void validate() const;
};

// Exact Table-style architectures: {Base, GHA, MS-GHA}-{6-3, 6-5, 6-7, 10-3,
// 6B-3} at full scale (MS-GHA without the 10-3/6B-3 rows). The desk preset
// shrinks every width (Dc=6, Dv=8, Dh=8, MLP=32) and accepts small L for
// quick runs; a trailing "-desk" on the label is equivalent to desk=true.
ModelConfig build_variant(const std::string& label, bool desk = false);

struct ParamSpec {
  std::string name;
  ag::Shape shape;
  ParamGroup group = ParamGroup::rest;
};

// Deterministic parameter directory; also the initialization order.
std::vector<ParamSpec> parameter_plan(const ModelConfig& cfg);
std::size_t count_parameters(const ModelConfig& cfg);

// Per-level forward traces for visualization and invariant checks. Level 0
// has no gates and no fusing state; those vectors stay empty ("absent", not
// zero).
struct LevelDiagnostics {
  int level = 0;
  std::size_t w = 0, h = 0;            // attention grid extents
  std::vector<float> attention;        // [t, w*h]
  std::vector<float> vtilde;           // [t, dv]
  std::vector<float> vhat;             // [t, dv]
  std::vector<float> visual_gate;      // [t, dv]
  std::vector<float> concept_gate;     // [t, dc]
  std::vector<float> hidden;           // [t, dh]
  std::vector<float> grid_min, grid_max;  // per-channel bounds of the projected grid
};

struct Diagnostics {
  std::size_t t = 0;
  std::size_t visual_dim = 0, concept_dim = 0, hidden_dim = 0;
  std::vector<LevelDiagnostics> levels;
};

struct RunOptions {
  bool training = false;
  bool want_diagnostics = false;
  std::uint64_t dropout_seed = 0;
  std::uint64_t step = 0;
};

struct InvariantReport {
  std::size_t attention = 0;  // rows not summing to one / negative weights
  std::size_t hull = 0;       // vtilde outside per-channel grid bounds
  std::size_t fusing = 0;     // |h| >= 1
  std::size_t gates = 0;      // gate activations outside [0, 1]
  std::size_t total() const { return attention + hull + fusing + gates; }
};

InvariantReport check_diagnostics(const Diagnostics& diag, double sum_eps = 1e-6);

template <class T>
struct NamedParam {
  std::string name;
  ParamGroup group = ParamGroup::rest;
  ag::Tensor<T> tensor;
};

template <class T>
struct ForwardResult {
  ag::Tensor<T> logits;
  Diagnostics diag;
};

template <class T>
class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  std::vector<NamedParam<T>>& parameters() { return params_; }
  const std::vector<NamedParam<T>>& parameters() const { return params_; }
  ag::Tensor<T> param(const std::string& name) const;

  ForwardResult<T> forward(const corpus::FeatureMaps& fm, std::span<const int> tokens,
                           ag::Tape<T>* tape, const RunOptions& opt = {}) const;

  ag::Tensor<T> predict_head(ag::Tape<T>* tape, const ag::Tensor<T>& vhat, const ag::Tensor<T>& c,
                             const RunOptions& opt) const;

  // next-word loss: targets are the inputs shifted one position left
  ag::Tensor<T> loss(ag::Tape<T>* tape, const ag::Tensor<T>& logits, std::span<const int> targets,
                     std::span<const std::uint8_t> mask) const;

 private:
  ForwardResult<T> forward_gha(const corpus::FeatureMaps& fm, std::span<const int> tokens,
                               ag::Tape<T>* tape, const RunOptions& opt) const;
  ForwardResult<T> forward_baseline(const corpus::FeatureMaps& fm, std::span<const int> tokens,
                                    ag::Tape<T>* tape, const RunOptions& opt) const;

  std::vector<encoder::ProjectedGrid<T>> project(const corpus::FeatureMaps& fm,
                                                 ag::Tape<T>* tape) const;

  decoder::LinearParams<T> linear_params(const std::string& prefix) const;
  decoder::ConvParams<T> conv_params(const std::string& prefix) const;
  decoder::LinearParams<T> attention_params(std::size_t level) const;
  fusing::FusingParams<T> fusing_params(std::size_t level) const;

  ModelConfig cfg_;
  std::vector<NamedParam<T>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// -----------------------------------------------------------------------------
// implementation

namespace detail {

template <class T>
std::vector<float> to_float(const ag::Tensor<T>& t) {
  std::vector<float> out(t.size());
  auto d = t.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(d[i]);
  return out;
}

template <class T>
void grid_bounds(const ag::Tensor<T>& cells, std::vector<float>& lo, std::vector<float>& hi) {
  const std::size_t n = cells.dim(0), d = cells.dim(1);
  lo.assign(d, 0.0f);
  hi.assign(d, 0.0f);
  for (std::size_t c = 0; c < d; ++c) {
    float mn = static_cast<float>(cells.data()[c]);
    float mx = mn;
    for (std::size_t i = 1; i < n; ++i) {
      const float v = static_cast<float>(cells.data()[i * d + c]);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    lo[c] = mn;
    hi[c] = mx;
  }
}

}  // namespace detail

template <class T>
Model<T>::Model(ModelConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::mt19937_64 rng(init_seed);
  for (const auto& spec : parameter_plan(cfg_)) {
    NamedParam<T> p;
    p.name = spec.name;
    p.group = spec.group;
    p.tensor = ag::Tensor<T>::zeros(spec.shape, /*requires_grad=*/true);
    if (spec.name == "embed.E") {
      init::uniform(p.tensor, -0.08, 0.08, rng);
    } else if (spec.shape.size() == 2) {
      init::glorot_uniform(p.tensor, spec.shape[1], spec.shape[0], rng);
    } else if (spec.shape.size() == 3) {
      const std::size_t fan_in = spec.shape[0] * spec.shape[1];
      const std::size_t fan_out = spec.shape[0] * spec.shape[2];
      init::glorot_uniform(p.tensor, fan_in, fan_out, rng);
    }  // rank-1 biases stay zero
    index_[p.name] = params_.size();
    params_.push_back(std::move(p));
  }
}

template <class T>
ag::Tensor<T> Model<T>::param(const std::string& name) const {
  auto it = index_.find(name);
  ag::require(it != index_.end(), "model: unknown parameter " + name);
  return params_[it->second].tensor;
}

template <class T>
decoder::LinearParams<T> Model<T>::linear_params(const std::string& prefix) const {
  return {param(prefix + ".W"), param(prefix + ".b")};
}

template <class T>
decoder::ConvParams<T> Model<T>::conv_params(const std::string& prefix) const {
  return {param(prefix + ".K"), param(prefix + ".b")};
}

template <class T>
decoder::LinearParams<T> Model<T>::attention_params(std::size_t level) const {
  if (cfg_.family == Family::baseline) return linear_params("att.top");
  if (cfg_.share_attention) return linear_params("att.shared");
  return linear_params("att.l" + std::to_string(level));
}

template <class T>
fusing::FusingParams<T> Model<T>::fusing_params(std::size_t level) const {
  const std::string base = cfg_.share_fusing ? "fuse" : "fuse.l" + std::to_string(level);
  return {{param(base + ".Wr"), param(base + ".br")},
          {param(base + ".Wz"), param(base + ".bz")},
          {param(base + ".Wh"), param(base + ".bh")}};
}

template <class T>
std::vector<encoder::ProjectedGrid<T>> Model<T>::project(const corpus::FeatureMaps& fm,
                                                         ag::Tape<T>* tape) const {
  ag::require(!fm.grids.empty(), "model: feature maps are empty");
  for (std::size_t i = 0; i < cfg_.grid_selector.size(); ++i) {
    ag::require(cfg_.grid_selector[i] < fm.grids.size(),
                "model: feature file has fewer grids than the config expects");
    ag::require(fm.grids[cfg_.grid_selector[i]].channels == cfg_.grid_channels[i],
                "model: grid channel count does not match the config");
  }
  std::vector<decoder::LinearParams<T>> projs;
  for (std::size_t i = 0; i < cfg_.grid_selector.size(); ++i)
    projs.push_back(linear_params("encoder.proj" + std::to_string(i)));
  return encoder::project_scales<T>(tape, fm, cfg_.grid_selector, projs);
}

template <class T>
ag::Tensor<T> Model<T>::predict_head(ag::Tape<T>* tape, const ag::Tensor<T>& vhat,
                                     const ag::Tensor<T>& c, const RunOptions& opt) const {
  ag::Tensor<T> x = ag::concat_lastdim(tape, vhat, c);
  ag::Tensor<T> h1 = ag::elu(tape, ag::linear(tape, x, param("head.fc1.W"), param("head.fc1.b")));
  h1 = ag::dropout(tape, h1, cfg_.keep_prob, opt.training, {opt.dropout_seed, opt.step, 1});
  ag::Tensor<T> h2 = ag::elu(tape, ag::linear(tape, h1, param("head.fc2.W"), param("head.fc2.b")));
  h2 = ag::dropout(tape, h2, cfg_.keep_prob, opt.training, {opt.dropout_seed, opt.step, 2});
  return ag::linear(tape, h2, param("head.out.W"), param("head.out.b"));
}

template <class T>
ag::Tensor<T> Model<T>::loss(ag::Tape<T>* tape, const ag::Tensor<T>& logits,
                             std::span<const int> targets,
                             std::span<const std::uint8_t> mask) const {
  return ag::cross_entropy(tape, logits, targets, mask);
}

template <class T>
ForwardResult<T> Model<T>::forward(const corpus::FeatureMaps& fm, std::span<const int> tokens,
                                   ag::Tape<T>* tape, const RunOptions& opt) const {
  ag::require(!tokens.empty(), "model: empty token sequence");
  return cfg_.family == Family::baseline ? forward_baseline(fm, tokens, tape, opt)
                                         : forward_gha(fm, tokens, tape, opt);
}

// Per-level order: fuse the lower level into h^l, form concepts c^l gated by
// h^l, attend with c^l, then combine the attention feature with the carried
// one. This is the only schedule consistent with the dependencies between
// the four stages.
template <class T>
ForwardResult<T> Model<T>::forward_gha(const corpus::FeatureMaps& fm, std::span<const int> tokens,
                                       ag::Tape<T>* tape, const RunOptions& opt) const {
  const std::size_t t = tokens.size();
  const std::size_t levels = cfg_.dec.layers;
  auto grids = project(fm, tape);
  auto grid_at = [&](std::size_t level) -> encoder::ProjectedGrid<T>& {
    return grids[cfg_.assignment[level]];
  };

  ForwardResult<T> res;
  res.diag.t = t;
  res.diag.visual_dim = cfg_.visual_dim;
  res.diag.concept_dim = cfg_.dec.concept_dim;
  res.diag.hidden_dim = cfg_.hidden_dim;

  ag::Tensor<T> c = ag::embed(tape, tokens, param("embed.E"));
  auto att0 = attention::level_zero_attention(tape, grid_at(0).cells, c, attention_params(0));
  ag::Tensor<T> vhat = att0.vtilde;  // v^0 = v~0
  if (opt.want_diagnostics) {
    LevelDiagnostics d;
    d.level = 0;
    d.w = grid_at(0).w;
    d.h = grid_at(0).h;
    d.attention = detail::to_float(att0.weights);
    d.vtilde = detail::to_float(att0.vtilde);
    d.vhat = detail::to_float(vhat);
    detail::grid_bounds(grid_at(0).cells, d.grid_min, d.grid_max);
    res.diag.levels.push_back(std::move(d));
  }

  ag::Tensor<T> h = ag::Tensor<T>::zeros({t, cfg_.hidden_dim});
  for (std::size_t l = 1; l <= levels; ++l) {
    const std::string dec_base = "dec.l" + std::to_string(l);
    auto fused = fusing::fuse_step(tape, h, vhat, c, fusing_params(l));
    h = fused.h;
    decoder::GluOut<T> glu =
        cfg_.dec.bottleneck
            ? decoder::bottleneck_layer(tape, c, h,
                                        decoder::BottleneckParams<T>{conv_params(dec_base + ".s1"),
                                                                     conv_params(dec_base + ".s2"),
                                                                     conv_params(dec_base + ".s3")},
                                        linear_params(dec_base + ".gate"))
            : decoder::glu_layer(tape, c, h,
                                 decoder::GluLayerParams<T>{conv_params(dec_base + ".conv"),
                                                            linear_params(dec_base + ".gate")});
    c = glu.out;
    auto att = attention::attend(tape, grid_at(l).cells, c, attention_params(l));
    auto combined = attention::gate_combine(tape, att.vtilde, vhat, h,
                                            linear_params("vgate.l" + std::to_string(l)));
    vhat = combined.vhat;
    if (opt.want_diagnostics) {
      LevelDiagnostics d;
      d.level = static_cast<int>(l);
      d.w = grid_at(l).w;
      d.h = grid_at(l).h;
      d.attention = detail::to_float(att.weights);
      d.vtilde = detail::to_float(att.vtilde);
      d.vhat = detail::to_float(vhat);
      d.visual_gate = detail::to_float(combined.gate);
      d.concept_gate = detail::to_float(glu.gate);
      d.hidden = detail::to_float(h);
      detail::grid_bounds(grid_at(l).cells, d.grid_min, d.grid_max);
      res.diag.levels.push_back(std::move(d));
    }
  }
  res.logits = predict_head(tape, vhat, c, opt);
  return res;
}

template <class T>
ForwardResult<T> Model<T>::forward_baseline(const corpus::FeatureMaps& fm,
                                            std::span<const int> tokens, ag::Tape<T>* tape,
                                            const RunOptions& opt) const {
  const std::size_t levels = cfg_.dec.layers;
  auto grids = project(fm, tape);

  ForwardResult<T> res;
  res.diag.t = tokens.size();
  res.diag.visual_dim = cfg_.visual_dim;
  res.diag.concept_dim = cfg_.dec.concept_dim;
  res.diag.hidden_dim = cfg_.hidden_dim;

  ag::Tensor<T> c = ag::embed(tape, tokens, param("embed.E"));
  for (std::size_t l = 1; l <= levels; ++l) {
    const std::string dec_base = "dec.l" + std::to_string(l);
    decoder::GluOut<T> glu =
        cfg_.dec.bottleneck
            ? decoder::baseline_bottleneck_layer(
                  tape, c,
                  decoder::BottleneckParams<T>{conv_params(dec_base + ".s1"),
                                               conv_params(dec_base + ".s2"),
                                               conv_params(dec_base + ".s3")},
                  conv_params(dec_base + ".gate"))
            : decoder::baseline_glu_layer(
                  tape, c,
                  decoder::BaselineGluParams<T>{conv_params(dec_base + ".conv"),
                                                conv_params(dec_base + ".gate")});
    c = glu.out;
    if (opt.want_diagnostics) {
      LevelDiagnostics d;
      d.level = static_cast<int>(l);
      d.concept_gate = detail::to_float(glu.gate);
      res.diag.levels.push_back(std::move(d));
    }
  }
  auto& top = grids[cfg_.assignment[levels]];
  auto att = attention::attend(tape, top.cells, c, attention_params(levels));
  if (opt.want_diagnostics) {
    LevelDiagnostics* d = nullptr;
    for (auto& lv : res.diag.levels)
      if (lv.level == static_cast<int>(levels)) d = &lv;
    if (d == nullptr) {
      res.diag.levels.push_back({});
      d = &res.diag.levels.back();
      d->level = static_cast<int>(levels);
    }
    d->w = top.w;
    d->h = top.h;
    d->attention = detail::to_float(att.weights);
    d->vtilde = detail::to_float(att.vtilde);
    d->vhat = detail::to_float(att.vtilde);
    detail::grid_bounds(top.cells, d->grid_min, d->grid_max);
  }
  res.logits = predict_head(tape, att.vtilde, c, opt);
  return res;
}

}  // namespace gha::model

#endif  // GHA_MODEL_HPP_
