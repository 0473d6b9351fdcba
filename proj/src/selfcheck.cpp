// SPDX-License-Identifier: Apache-2.0

#include "gha/selfcheck.hpp"

#include "gha/gradcheck.hpp"
#include "gha/model.hpp"
#include "gha/synthetic.hpp"

namespace gha::selfcheck {

GradCheckSummary run_model_gradcheck(const std::string& variant, bool desk, std::uint64_t seed,
                                     double tolerance) {
  corpus::SyntheticConfig scfg;
  scfg.seed = seed;
  scfg.n_scenes = 1;
  const auto fm = corpus::generate_synthetic(scfg)[0].features;

  model::ModelConfig cfg = model::build_variant(variant, desk);
  cfg.vocab_size = 12;
  model::Model<double> m(cfg, seed + 1);

  const std::vector<int> tokens = {1, 4, 9, 6, 11};
  const std::vector<int> targets = {4, 9, 6, 11, 2};
  const std::vector<std::uint8_t> mask = {1, 1, 1, 1, 1};
  model::RunOptions opt;
  opt.training = true;
  opt.dropout_seed = seed;
  opt.step = 1;

  auto build = [&](ag::Tape<double>* tape) {
    auto res = m.forward(fm, tokens, tape, opt);
    return m.loss(tape, res.logits, targets, mask);
  };

  ag::Tape<double> tape;
  tape.backward(build(&tape));

  GradCheckSummary summary;
  for (auto& p : m.parameters()) {
    std::vector<double> analytic(p.tensor.grad_view().begin(), p.tensor.grad_view().end());
    if (analytic.empty()) analytic.assign(p.tensor.size(), 0.0);
    auto rep = gradcheck::check_tensor(
        [&]() { return build(static_cast<ag::Tape<double>*>(nullptr)).item(); }, p.tensor, analytic);
    ParamCheck pc{p.name, rep.max_rel, rep.max_rel <= tolerance};
    summary.max_rel = std::max(summary.max_rel, rep.max_rel);
    summary.pass = summary.pass && pc.pass;
    summary.params.push_back(std::move(pc));
  }
  return summary;
}

}  // namespace gha::selfcheck
