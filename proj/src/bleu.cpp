// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>

#include "gha/infer.hpp"

namespace gha::infer {

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<Ngram, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[Ngram(tokens.begin() + static_cast<long>(i), tokens.begin() + static_cast<long>(i + n))];
  return counts;
}

// clipped matches against the per-ngram max over references
std::size_t clipped_matches(const std::vector<std::string>& cand,
                            const std::vector<std::vector<std::string>>& refs, std::size_t n) {
  auto cand_counts = ngram_counts(cand, n);
  if (cand_counts.empty()) return 0;
  std::map<Ngram, std::size_t> ref_max;
  for (const auto& ref : refs)
    for (const auto& [gram, count] : ngram_counts(ref, n)) {
      auto& slot = ref_max[gram];
      slot = std::max(slot, count);
    }
  std::size_t matches = 0;
  for (const auto& [gram, count] : cand_counts) {
    auto it = ref_max.find(gram);
    if (it != ref_max.end()) matches += std::min(count, it->second);
  }
  return matches;
}

std::size_t closest_ref_length(std::size_t cand_len, const std::vector<std::vector<std::string>>& refs) {
  std::size_t best = refs.front().size();
  for (const auto& ref : refs) {
    const auto d = [&](std::size_t len) {
      return len > cand_len ? len - cand_len : cand_len - len;
    };
    if (d(ref.size()) < d(best) || (d(ref.size()) == d(best) && ref.size() < best)) best = ref.size();
  }
  return best;
}

}  // namespace

BleuResult corpus_bleu(const std::vector<std::vector<std::string>>& candidates,
                       const std::vector<std::vector<std::vector<std::string>>>& references,
                       int max_n) {
  if (candidates.empty()) throw std::invalid_argument("bleu: empty candidate set");
  if (candidates.size() != references.size())
    throw std::invalid_argument("bleu: candidate/reference count mismatch");
  for (const auto& refs : references)
    if (refs.empty()) throw std::invalid_argument("bleu: every candidate needs at least one reference");

  BleuResult out;
  std::size_t cand_total = 0, ref_total = 0;
  std::vector<std::size_t> matches(static_cast<std::size_t>(max_n), 0);
  std::vector<std::size_t> totals(static_cast<std::size_t>(max_n), 0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_total += candidates[i].size();
    ref_total += closest_ref_length(candidates[i].size(), references[i]);
    for (int n = 1; n <= max_n; ++n) {
      const auto nn = static_cast<std::size_t>(n);
      matches[nn - 1] += clipped_matches(candidates[i], references[i], nn);
      totals[nn - 1] += candidates[i].size() >= nn ? candidates[i].size() - nn + 1 : 0;
    }
  }
  out.brevity_penalty =
      cand_total >= ref_total || cand_total == 0
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_total) / static_cast<double>(cand_total));
  for (int n = 1; n <= max_n; ++n) {
    const auto nn = static_cast<std::size_t>(n);
    out.precisions[nn - 1] =
        totals[nn - 1] == 0 ? 0.0 : static_cast<double>(matches[nn - 1]) / static_cast<double>(totals[nn - 1]);
    double log_sum = 0.0;
    bool zero = false;
    for (int k = 1; k <= n; ++k) {
      const double p = out.precisions[static_cast<std::size_t>(k) - 1];
      if (p <= 0.0) {
        zero = true;
        break;
      }
      log_sum += std::log(p);
    }
    out.bleu[nn - 1] = zero ? 0.0 : out.brevity_penalty * std::exp(log_sum / n);
  }
  return out;
}

double sentence_bleu(const std::vector<std::string>& candidate,
                     const std::vector<std::vector<std::string>>& references, int max_n) {
  if (references.empty()) throw std::invalid_argument("bleu: needs at least one reference");
  const std::size_t ref_len = closest_ref_length(candidate.size(), references);
  const double bp = candidate.size() >= ref_len || candidate.empty()
                        ? (candidate.empty() ? 0.0 : 1.0)
                        : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(candidate.size()));
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto nn = static_cast<std::size_t>(n);
    const std::size_t total = candidate.size() >= nn ? candidate.size() - nn + 1 : 0;
    const std::size_t match = clipped_matches(candidate, references, nn);
    // add-one smoothing on zero counts
    const double p = match > 0 ? static_cast<double>(match) / static_cast<double>(total)
                               : 1.0 / static_cast<double>(total + 1);
    log_sum += std::log(p);
  }
  return bp * std::exp(log_sum / max_n);
}

}  // namespace gha::infer
