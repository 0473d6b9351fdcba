// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_INFER_HPP_
#define GHA_INFER_HPP_

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gha/dataset.hpp"
#include "gha/model.hpp"
#include "gha/vocab.hpp"

namespace gha::infer {

// log-probabilities of the next token given the prefix (prefix[0] = <start>)
using ScoreFn = std::function<std::vector<float>(std::span<const int>)>;

struct DecodeResult {
  std::vector<int> tokens;  // generated tokens, including <end> when emitted
  double sum_logprob = 0.0;
  double normalized = 0.0;  // sum / generated count
};

// argmax per step, ties to the lowest token id, until <end> or max_len
DecodeResult greedy(const ScoreFn& score, std::size_t vocab, std::size_t max_len);

// Breadth-limited best-first search: top-`width` candidates per step,
// hypotheses retiring to a completed pool on <end>, final ranking by
// length-normalized log-probability with lexicographic tie-break. <pad> and
// <start> are never proposed.
DecodeResult beam_search(const ScoreFn& score, std::size_t vocab, std::size_t width,
                         std::size_t max_len);

// full causal re-run per step; prefix consistency of the decoder makes this
// equivalent to incremental decoding
ScoreFn model_scorer(const model::Model<float>& m, const corpus::FeatureMaps& fm);

struct BleuResult {
  std::array<double, 4> bleu{};        // cumulative B-1..B-4
  std::array<double, 4> precisions{};  // modified n-gram precisions
  double brevity_penalty = 1.0;
};

// Corpus-level modified n-gram precision with brevity penalty (closest
// reference length, ties to the shorter).
BleuResult corpus_bleu(const std::vector<std::vector<std::string>>& candidates,
                       const std::vector<std::vector<std::vector<std::string>>>& references,
                       int max_n = 4);

// Sentence-level variant with add-one smoothing on zero counts.
double sentence_bleu(const std::vector<std::string>& candidate,
                     const std::vector<std::vector<std::string>>& references, int max_n = 4);

struct EvalResult {
  BleuResult scores;
  std::size_t items = 0;
};

EvalResult evaluate_bleu(const model::Model<float>& m, const std::vector<corpus::DatasetItem>& items,
                         const corpus::Vocabulary& vocab, std::size_t beam_width,
                         std::size_t max_len);

}  // namespace gha::infer

#endif  // GHA_INFER_HPP_
