// SPDX-License-Identifier: Apache-2.0

#include "gha/model.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace gha::model {

const char* family_name(Family f) {
  switch (f) {
    case Family::baseline: return "baseline";
    case Family::gha: return "gha";
    case Family::ms_gha: return "ms-gha";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "baseline") return Family::baseline;
  if (s == "gha") return Family::gha;
  if (s == "ms-gha") return Family::ms_gha;
  throw std::invalid_argument("model: unknown family " + s);
}

void ModelConfig::validate() const {
  ag::require(dec.concept_dim > 0 && visual_dim > 0 && hidden_dim > 0 && mlp_hidden > 0,
              "config: dimensions must be positive");
  ag::require(dec.kernel >= 1, "config: kernel must be >= 1");
  ag::require(vocab_size > 0, "config: vocab_size not set");
  ag::require(keep_prob > 0.0 && keep_prob <= 1.0, "config: keep_prob out of range");
  ag::require(!grid_selector.empty() && grid_selector.size() == grid_channels.size(),
              "config: grid selector/channel lists inconsistent");
  ag::require(assignment.size() == dec.layers + 1, "config: assignment must cover levels 0..L");
  for (std::size_t g : assignment)
    ag::require(g < grid_selector.size(), "config: assignment references a missing grid");
  if (family == Family::ms_gha)
    ag::require(grid_selector.size() >= 2, "config: ms-gha needs at least two grids");
}

nlohmann::json ModelConfig::to_json() const {
  return nlohmann::json{{"family", family_name(family)},
                        {"label", label},
                        {"layers", dec.layers},
                        {"kernel", dec.kernel},
                        {"bottleneck", dec.bottleneck},
                        {"concept_dim", dec.concept_dim},
                        {"visual_dim", visual_dim},
                        {"hidden_dim", hidden_dim},
                        {"mlp_hidden", mlp_hidden},
                        {"keep_prob", keep_prob},
                        {"vocab_size", vocab_size},
                        {"share_attention", share_attention},
                        {"share_fusing", share_fusing},
                        {"grid_selector", grid_selector},
                        {"grid_channels", grid_channels},
                        {"assignment", assignment}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.family = family_from_string(j.at("family").get<std::string>());
  cfg.label = j.at("label").get<std::string>();
  cfg.dec.layers = j.at("layers").get<std::size_t>();
  cfg.dec.kernel = j.at("kernel").get<std::size_t>();
  cfg.dec.bottleneck = j.at("bottleneck").get<bool>();
  cfg.dec.concept_dim = j.at("concept_dim").get<std::size_t>();
  cfg.dec.label = cfg.label;
  cfg.visual_dim = j.at("visual_dim").get<std::size_t>();
  cfg.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  cfg.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
  cfg.keep_prob = j.at("keep_prob").get<double>();
  cfg.vocab_size = j.at("vocab_size").get<std::size_t>();
  cfg.share_attention = j.at("share_attention").get<bool>();
  cfg.share_fusing = j.at("share_fusing").get<bool>();
  cfg.grid_selector = j.at("grid_selector").get<std::vector<std::size_t>>();
  cfg.grid_channels = j.at("grid_channels").get<std::vector<std::size_t>>();
  cfg.assignment = j.at("assignment").get<std::vector<std::size_t>>();
  return cfg;
}

namespace {

// level -> grid assignment; for three scales the split follows the 2/3/2
// proportion of levels over (fine, mid, coarse), otherwise contiguous equal
// shares.
std::vector<std::size_t> make_assignment(std::size_t levels_total, std::size_t n_grids) {
  std::vector<std::size_t> a(levels_total);
  if (n_grids <= 1) return a;
  if (n_grids == 3) {
    const auto b1 = static_cast<std::size_t>(std::lround(2.0 * levels_total / 7.0));
    const auto b2 = static_cast<std::size_t>(std::lround(5.0 * levels_total / 7.0));
    for (std::size_t l = 0; l < levels_total; ++l) a[l] = l < b1 ? 0 : (l < b2 ? 1 : 2);
    return a;
  }
  for (std::size_t l = 0; l < levels_total; ++l)
    a[l] = std::min(n_grids - 1, l * n_grids / levels_total);
  return a;
}

struct ParsedLabel {
  std::string family;
  std::size_t layers = 0;
  bool bottleneck = false;
  std::size_t kernel = 0;
  bool desk = false;
};

ParsedLabel parse_label(std::string label) {
  ParsedLabel p;
  const std::string desk_suffix = "-desk";
  if (label.size() > desk_suffix.size() &&
      label.compare(label.size() - desk_suffix.size(), desk_suffix.size(), desk_suffix) == 0) {
    p.desk = true;
    label.resize(label.size() - desk_suffix.size());
  }
  for (const char* fam : {"MS-GHA", "GHA", "Base"}) {
    const std::size_t n = std::string(fam).size();
    if (label.size() > n + 1 && label.compare(0, n, fam) == 0 && label[n] == '-') {
      p.family = fam;
      label = label.substr(n + 1);
      break;
    }
  }
  if (p.family.empty()) throw std::invalid_argument("build_variant: unknown label family");
  const auto dash = label.find('-');
  if (dash == std::string::npos) throw std::invalid_argument("build_variant: label needs L-k");
  std::string lpart = label.substr(0, dash);
  std::string kpart = label.substr(dash + 1);
  if (!lpart.empty() && lpart.back() == 'B') {
    p.bottleneck = true;
    lpart.pop_back();
  }
  try {
    p.layers = static_cast<std::size_t>(std::stoul(lpart));
    p.kernel = static_cast<std::size_t>(std::stoul(kpart));
  } catch (const std::exception&) {
    throw std::invalid_argument("build_variant: malformed label");
  }
  if (p.layers == 0 || p.kernel == 0) throw std::invalid_argument("build_variant: L and k must be >= 1");
  return p;
}

}  // namespace

ModelConfig build_variant(const std::string& label, bool desk) {
  ParsedLabel p = parse_label(label);
  desk = desk || p.desk;

  if (!desk) {
    const bool known = (!p.bottleneck && ((p.layers == 6 && (p.kernel == 3 || p.kernel == 5 || p.kernel == 7)) ||
                                          (p.layers == 10 && p.kernel == 3))) ||
                       (p.bottleneck && p.layers == 6 && p.kernel == 3);
    if (!known) throw std::invalid_argument("build_variant: unknown label " + label);
    if (p.family == "MS-GHA" && (p.bottleneck || p.layers != 6))
      throw std::invalid_argument("build_variant: unknown label " + label);
  }

  ModelConfig cfg;
  cfg.label = label;
  cfg.family = p.family == "Base" ? Family::baseline : (p.family == "GHA" ? Family::gha : Family::ms_gha);
  cfg.dec.layers = p.layers;
  cfg.dec.kernel = p.kernel;
  cfg.dec.bottleneck = p.bottleneck;
  cfg.dec.label = label;

  if (desk) {
    cfg.dec.concept_dim = 6;
    cfg.visual_dim = 8;
    cfg.hidden_dim = 8;
    cfg.mlp_hidden = 32;
    // generated feature files carry (fine, mid, coarse) grids
    if (cfg.family == Family::ms_gha) {
      cfg.grid_selector = {0, 1, 2};
      cfg.grid_channels = {4, 8, 16};
    } else {
      cfg.grid_selector = {2};
      cfg.grid_channels = {16};
    }
  } else {
    cfg.dec.concept_dim = 300;
    cfg.visual_dim = 2048;
    cfg.hidden_dim = 512;
    cfg.mlp_hidden = 4096;
    if (cfg.family == Family::ms_gha) {
      cfg.grid_selector = {0, 1, 2};
      cfg.grid_channels = {512, 1024, 2048};
    } else {
      cfg.grid_selector = {0};
      cfg.grid_channels = {2048};
    }
  }
  cfg.assignment = make_assignment(cfg.dec.layers + 1, cfg.grid_selector.size());
  return cfg;
}

std::vector<ParamSpec> parameter_plan(const ModelConfig& cfg) {
  std::vector<ParamSpec> plan;
  const std::size_t dc = cfg.dec.concept_dim, dv = cfg.visual_dim, dh = cfg.hidden_dim;
  const std::size_t k = cfg.dec.kernel, levels = cfg.dec.layers, mlp = cfg.mlp_hidden;
  const bool hierarchical = cfg.family != Family::baseline;

  plan.push_back({"embed.E", {cfg.vocab_size, dc}, ParamGroup::rest});

  for (std::size_t i = 0; i < cfg.grid_selector.size(); ++i) {
    const std::string base = "encoder.proj" + std::to_string(i);
    plan.push_back({base + ".W", {dv, cfg.grid_channels[i]}, ParamGroup::encoder});
    plan.push_back({base + ".b", {dv}, ParamGroup::encoder});
  }

  auto add_linear = [&](const std::string& base, std::size_t out, std::size_t in) {
    plan.push_back({base + ".W", {out, in}, ParamGroup::rest});
    plan.push_back({base + ".b", {out}, ParamGroup::rest});
  };
  auto add_conv = [&](const std::string& base, std::size_t taps, std::size_t cin, std::size_t cout) {
    plan.push_back({base + ".K", {taps, cin, cout}, ParamGroup::rest});
    plan.push_back({base + ".b", {cout}, ParamGroup::rest});
  };

  if (!hierarchical) {
    add_linear("att.top", dv, dc);
  } else if (cfg.share_attention) {
    add_linear("att.shared", dv, dc);
  } else {
    for (std::size_t l = 0; l <= levels; ++l) add_linear("att.l" + std::to_string(l), dv, dc);
  }

  for (std::size_t l = 1; l <= levels; ++l) {
    const std::string base = "dec.l" + std::to_string(l);
    if (cfg.dec.bottleneck) {
      add_conv(base + ".s1", 1, dc, dc);
      add_conv(base + ".s2", k, dc, dc);
      add_conv(base + ".s3", 1, dc, dc);
      if (hierarchical)
        add_linear(base + ".gate", dc, dh);
      else
        add_conv(base + ".gate", 1, dc, dc);
    } else {
      add_conv(base + ".conv", k, dc, dc);
      if (hierarchical)
        add_linear(base + ".gate", dc, dh);
      else
        add_conv(base + ".gate", k, dc, dc);
    }
  }

  if (hierarchical) {
    for (std::size_t l = 1; l <= levels; ++l) add_linear("vgate.l" + std::to_string(l), dv, dh);
    const std::size_t gru_in = dh + dv + dc;
    auto add_fuse = [&](const std::string& base) {
      plan.push_back({base + ".Wr", {dh, gru_in}, ParamGroup::rest});
      plan.push_back({base + ".br", {dh}, ParamGroup::rest});
      plan.push_back({base + ".Wz", {dh, gru_in}, ParamGroup::rest});
      plan.push_back({base + ".bz", {dh}, ParamGroup::rest});
      plan.push_back({base + ".Wh", {dh, gru_in}, ParamGroup::rest});
      plan.push_back({base + ".bh", {dh}, ParamGroup::rest});
    };
    if (cfg.share_fusing)
      add_fuse("fuse");
    else
      for (std::size_t l = 1; l <= levels; ++l) add_fuse("fuse.l" + std::to_string(l));
  }

  add_linear("head.fc1", mlp, dv + dc);
  add_linear("head.fc2", mlp, mlp);
  add_linear("head.out", cfg.vocab_size, mlp);
  return plan;
}

std::size_t count_parameters(const ModelConfig& cfg) {
  std::size_t n = 0;
  for (const auto& spec : parameter_plan(cfg)) n += ag::numel(spec.shape);
  return n;
}

InvariantReport check_diagnostics(const Diagnostics& diag, double sum_eps) {
  InvariantReport rep;
  for (const auto& lv : diag.levels) {
    const std::size_t cells = lv.w * lv.h;
    if (!lv.attention.empty()) {
      for (std::size_t t = 0; t < diag.t; ++t) {
        double s = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
          const float a = lv.attention[t * cells + c];
          if (a < 0.0f) ++rep.attention;
          s += a;
        }
        if (std::abs(s - 1.0) > sum_eps) ++rep.attention;
      }
    }
    if (!lv.vtilde.empty() && !lv.grid_min.empty()) {
      const std::size_t dv = lv.grid_min.size();
      for (std::size_t t = 0; t < diag.t; ++t)
        for (std::size_t d = 0; d < dv; ++d) {
          const float v = lv.vtilde[t * dv + d];
          const float tol = 1e-5f * (1.0f + std::max(std::abs(lv.grid_min[d]), std::abs(lv.grid_max[d])));
          if (v < lv.grid_min[d] - tol || v > lv.grid_max[d] + tol) ++rep.hull;
        }
    }
    for (float hv : lv.hidden)
      if (!(std::abs(hv) < 1.0f)) ++rep.fusing;
    for (float g : lv.visual_gate)
      if (g < 0.0f || g > 1.0f) ++rep.gates;
    for (float g : lv.concept_gate)
      if (g < 0.0f || g > 1.0f) ++rep.gates;
  }
  return rep;
}

}  // namespace gha::model
