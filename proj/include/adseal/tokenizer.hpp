#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "adseal/matrix.hpp"

namespace adseal {

// Frozen token <-> id mapping. Ids 0-2 are reserved sentinels.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kCls = 1;
  static constexpr int kUnk = 2;

  Vocabulary();

  // Returns the token id, or kUnk for tokens outside the vocabulary.
  int id(const std::string& token) const;
  const std::string& token(int id) const { return id_to_token_.at(id); }
  int size() const { return static_cast<int>(id_to_token_.size()); }

  // Content tokens appended after the reserved ids; caller guarantees order.
  void append_token(const std::string& token);

  // One token per line, line number = id (reserved tokens on lines 0-2).
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

struct TokenSequence {
  std::vector<int> ids;      // position 0 is always [CLS]
  std::string source_text;
};

// Lowercases and splits ad copy into word tokens. Punctuation separates
// tokens except '-' and '\'' between alphanumerics ("e-book" stays whole).
std::vector<std::string> split_words(const std::string& text);

// Tokens sorted by (frequency desc, lexicographic) after the reserved ids;
// tokens below min_freq excluded. Empty corpus is an error.
Vocabulary build_vocab(const std::vector<std::string>& corpus, int min_freq);

// Prepends [CLS], maps unknown tokens to [UNK], truncates to max_len.
TokenSequence tokenize(const std::string& text, const Vocabulary& vocab, int max_len = 32);

struct EmbeddingTable {
  Matrix token_matrix;     // vocab x d_model
  Matrix position_matrix;  // max_len x d_model
};

// Row i = token_matrix[ids[i]] + position_matrix[i].
Matrix embed(const TokenSequence& seq, const EmbeddingTable& table);

}  // namespace adseal
