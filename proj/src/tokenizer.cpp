#include "adseal/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "adseal/errors.hpp"

namespace adseal {

Vocabulary::Vocabulary() {
  id_to_token_ = {"[PAD]", "[CLS]", "[UNK]"};
  for (int i = 0; i < 3; ++i) token_to_id_[id_to_token_[i]] = i;
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

void Vocabulary::append_token(const std::string& token) {
  if (token_to_id_.count(token)) {
    throw DataError("vocabulary: duplicate token '" + token + "'");
  }
  token_to_id_[token] = static_cast<int>(id_to_token_.size());
  id_to_token_.push_back(token);
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("vocabulary: cannot write " + path);
  for (const auto& t : id_to_token_) out << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("vocabulary: cannot read " + path);
  Vocabulary v;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    if (lineno < 3) {
      if (line != v.id_to_token_[lineno]) {
        throw DataError("vocabulary: line " + std::to_string(lineno) +
                        " must be the reserved token " + v.id_to_token_[lineno]);
      }
    } else {
      v.append_token(line);
    }
    ++lineno;
  }
  if (lineno < 3) throw DataError("vocabulary: file " + path + " is truncated");
  return v;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  const auto is_word = [](unsigned char ch) { return std::isalnum(ch) != 0; };
  for (size_t i = 0; i < text.size(); ++i) {
    const unsigned char ch = static_cast<unsigned char>(text[i]);
    if (is_word(ch)) {
      cur.push_back(static_cast<char>(std::tolower(ch)));
    } else if ((ch == '-' || ch == '\'') && !cur.empty() && i + 1 < text.size() &&
               is_word(static_cast<unsigned char>(text[i + 1]))) {
      cur.push_back(static_cast<char>(ch));
    } else if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

Vocabulary build_vocab(const std::vector<std::string>& corpus, int min_freq) {
  if (corpus.empty()) throw DataError("build_vocab: empty corpus");
  std::map<std::string, int> freq;
  for (const auto& text : corpus) {
    for (const auto& w : split_words(text)) ++freq[w];
  }
  std::vector<std::pair<std::string, int>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [token, count] : items) {
    if (count >= min_freq) v.append_token(token);
  }
  return v;
}

TokenSequence tokenize(const std::string& text, const Vocabulary& vocab, int max_len) {
  TokenSequence seq;
  seq.source_text = text;
  seq.ids.push_back(Vocabulary::kCls);
  for (const auto& w : split_words(text)) {
    if (static_cast<int>(seq.ids.size()) >= max_len) break;
    seq.ids.push_back(vocab.id(w));
  }
  return seq;
}

Matrix embed(const TokenSequence& seq, const EmbeddingTable& table) {
  const int n = static_cast<int>(seq.ids.size());
  const int d = table.token_matrix.cols;
  if (n > table.position_matrix.rows) {
    throw DimensionError("embed: sequence length " + std::to_string(n) +
                         " exceeds position table rows " +
                         std::to_string(table.position_matrix.rows));
  }
  Matrix out(n, d);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) {
      out.at(i, c) = table.token_matrix.at(seq.ids[i], c) + table.position_matrix.at(i, c);
    }
  }
  return out;
}

}  // namespace adseal
