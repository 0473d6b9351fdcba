// SPDX-License-Identifier: Apache-2.0
#ifndef GHA_VOCAB_HPP_
#define GHA_VOCAB_HPP_

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace gha::corpus {

// Token ids 0..3 are reserved. Remaining ids are assigned by descending
// corpus frequency with lexicographic tie-break; tokens rarer than min_count
// fall back to <unk>.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kStart = 1;
  static constexpr int kEnd = 2;
  static constexpr int kUnk = 3;

  Vocabulary() = default;

  static Vocabulary build(const std::vector<std::string>& captions, int min_count);

  // lowercases, strips punctuation, splits on whitespace
  static std::vector<std::string> tokenize(const std::string& text);

  int id(const std::string& token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return id_to_token_.size(); }
  int min_count() const { return min_count_; }

  std::vector<int> encode(const std::string& caption) const;
  std::string decode(std::span<const int> ids) const;  // skips reserved tokens

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
  int min_count_ = 1;
};

}  // namespace gha::corpus

#endif  // GHA_VOCAB_HPP_
