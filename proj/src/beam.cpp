// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gha/infer.hpp"
#include "gha/ops.hpp"

namespace gha::infer {

namespace {

constexpr int kPad = corpus::Vocabulary::kPad;
constexpr int kStart = corpus::Vocabulary::kStart;
constexpr int kEnd = corpus::Vocabulary::kEnd;

struct Hypothesis {
  std::vector<int> prefix;  // starts with <start>
  double sum_logprob = 0.0;
  std::size_t generated = 0;
  double normalized() const { return generated ? sum_logprob / double(generated) : 0.0; }
};

bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

DecodeResult to_result(const Hypothesis& h) {
  DecodeResult r;
  r.tokens.assign(h.prefix.begin() + 1, h.prefix.end());
  r.sum_logprob = h.sum_logprob;
  r.normalized = h.normalized();
  return r;
}

}  // namespace

DecodeResult greedy(const ScoreFn& score, std::size_t vocab, std::size_t max_len) {
  ag::require(max_len >= 1, "greedy: max_len must be >= 1");
  Hypothesis hyp;
  hyp.prefix = {kStart};
  for (std::size_t step = 0; step < max_len; ++step) {
    std::vector<float> lp = score(hyp.prefix);
    ag::require(lp.size() == vocab, "greedy: scorer vocab size mismatch");
    int best = -1;
    for (std::size_t tok = 0; tok < vocab; ++tok) {
      if (static_cast<int>(tok) == kPad || static_cast<int>(tok) == kStart) continue;
      if (best < 0 || lp[tok] > lp[static_cast<std::size_t>(best)]) best = static_cast<int>(tok);
    }
    hyp.prefix.push_back(best);
    hyp.sum_logprob += lp[static_cast<std::size_t>(best)];
    ++hyp.generated;
    if (best == kEnd) break;
  }
  return to_result(hyp);
}

DecodeResult beam_search(const ScoreFn& score, std::size_t vocab, std::size_t width,
                         std::size_t max_len) {
  ag::require(width >= 1, "beam_search: width must be >= 1");
  ag::require(max_len >= 1, "beam_search: max_len must be >= 1");
  std::vector<Hypothesis> live = {{{kStart}, 0.0, 0}};
  std::vector<Hypothesis> completed;

  for (std::size_t step = 1; step <= max_len && !live.empty(); ++step) {
    struct Cand {
      std::size_t from;
      int token;
      double sum;
    };
    std::vector<Cand> cands;
    cands.reserve(live.size() * vocab);
    for (std::size_t i = 0; i < live.size(); ++i) {
      std::vector<float> lp = score(live[i].prefix);
      ag::require(lp.size() == vocab, "beam_search: scorer vocab size mismatch");
      for (std::size_t tok = 0; tok < vocab; ++tok) {
        if (static_cast<int>(tok) == kPad || static_cast<int>(tok) == kStart) continue;
        cands.push_back({i, static_cast<int>(tok), live[i].sum_logprob + lp[tok]});
      }
    }
    const std::size_t keep = std::min(width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<long>(keep), cands.end(),
                      [&](const Cand& a, const Cand& b) {
                        if (a.sum != b.sum) return a.sum > b.sum;
                        if (a.from != b.from) return a.from < b.from;
                        return a.token < b.token;
                      });
    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      Hypothesis h = live[cands[i].from];
      h.prefix.push_back(cands[i].token);
      h.sum_logprob = cands[i].sum;
      h.generated = step;
      if (cands[i].token == kEnd)
        completed.push_back(std::move(h));
      else if (step == max_len)
        completed.push_back(std::move(h));  // length limit reached, finish as-is
      else
        next.push_back(std::move(h));
    }
    live = std::move(next);
  }

  const Hypothesis* best = nullptr;
  for (const auto& h : completed)
    if (best == nullptr || h.normalized() > best->normalized() ||
        (h.normalized() == best->normalized() && lex_less(h.prefix, best->prefix)))
      best = &h;
  ag::require(best != nullptr, "beam_search: no completed hypothesis");
  return to_result(*best);
}

ScoreFn model_scorer(const model::Model<float>& m, const corpus::FeatureMaps& fm) {
  return [&m, &fm](std::span<const int> prefix) {
    auto res = m.forward(fm, prefix, nullptr, {});
    const std::size_t v = res.logits.dim(1);
    const std::size_t t = res.logits.dim(0);
    const float* row = res.logits.data().data() + (t - 1) * v;
    // log-softmax of the last row
    float mx = row[0];
    for (std::size_t i = 1; i < v; ++i) mx = std::max(mx, row[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < v; ++i) z += std::exp(double(row[i]) - mx);
    const double logz = std::log(z) + mx;
    std::vector<float> lp(v);
    for (std::size_t i = 0; i < v; ++i) lp[i] = static_cast<float>(double(row[i]) - logz);
    return lp;
  };
}

EvalResult evaluate_bleu(const model::Model<float>& m, const std::vector<corpus::DatasetItem>& items,
                         const corpus::Vocabulary& vocab, std::size_t beam_width,
                         std::size_t max_len) {
  std::vector<std::vector<std::string>> cands;
  std::vector<std::vector<std::vector<std::string>>> refs;
  for (const auto& item : items) {
    auto scorer = model_scorer(m, item.features);
    auto result = beam_search(scorer, vocab.size(), beam_width, max_len);
    cands.push_back(corpus::Vocabulary::tokenize(vocab.decode(result.tokens)));
    std::vector<std::vector<std::string>> item_refs;
    for (const auto& caption : item.captions)
      item_refs.push_back(corpus::Vocabulary::tokenize(caption));
    refs.push_back(std::move(item_refs));
  }
  return {corpus_bleu(cands, refs), items.size()};
}

}  // namespace gha::infer
