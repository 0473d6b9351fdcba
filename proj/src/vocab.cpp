// SPDX-License-Identifier: Apache-2.0

#include "gha/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gha::corpus {

std::vector<std::string> Vocabulary::tokenize(const std::string& text) {
  std::string clean;
  clean.reserve(text.size());
  for (unsigned char c : text) {
    if (std::isalnum(c))
      clean.push_back(static_cast<char>(std::tolower(c)));
    else if (c == '<' || c == '>')
      clean.push_back(static_cast<char>(c));  // keep reserved-token brackets
    else
      clean.push_back(' ');
  }
  std::vector<std::string> out;
  std::istringstream is(clean);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& captions, int min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& caption : captions)
    for (auto& tok : tokenize(caption)) ++counts[tok];
  if (counts.empty()) throw std::invalid_argument("vocab: empty corpus");

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts)
    if (n >= static_cast<std::size_t>(min_count)) kept.emplace_back(tok, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.min_count_ = min_count;
  v.id_to_token_ = {"<pad>", "<start>", "<end>", "<unk>"};
  for (auto& [tok, n] : kept) v.id_to_token_.push_back(tok);
  for (std::size_t i = 0; i < v.id_to_token_.size(); ++i)
    v.token_to_id_[v.id_to_token_[i]] = static_cast<int>(i);
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int tid) const {
  if (tid < 0 || static_cast<std::size_t>(tid) >= id_to_token_.size())
    throw std::invalid_argument("vocab: id out of range: " + std::to_string(tid));
  return id_to_token_[static_cast<std::size_t>(tid)];
}

std::vector<int> Vocabulary::encode(const std::string& caption) const {
  std::vector<int> ids;
  for (auto& tok : tokenize(caption)) ids.push_back(id(tok));
  return ids;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::string out;
  for (int tid : ids) {
    if (tid == kPad || tid == kStart || tid == kEnd) continue;
    if (!out.empty()) out.push_back(' ');
    out += token(tid);
  }
  return out;
}

nlohmann::json Vocabulary::to_json() const {
  return nlohmann::json{{"min_count", min_count_}, {"tokens", id_to_token_}};
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  Vocabulary v;
  v.min_count_ = j.at("min_count").get<int>();
  v.id_to_token_ = j.at("tokens").get<std::vector<std::string>>();
  if (v.id_to_token_.size() < 4 || v.id_to_token_[0] != "<pad>" || v.id_to_token_[1] != "<start>" ||
      v.id_to_token_[2] != "<end>" || v.id_to_token_[3] != "<unk>")
    throw std::runtime_error("vocab: reserved tokens missing or reordered");
  for (std::size_t i = 0; i < v.id_to_token_.size(); ++i)
    v.token_to_id_[v.id_to_token_[i]] = static_cast<int>(i);
  return v;
}

}  // namespace gha::corpus
