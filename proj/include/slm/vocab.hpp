#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "slm/token_seq.hpp"

namespace slm {

// Token <-> index map. Indices 0..4 are PAD, BOS, EOS, UNK, MASK; corpus
// tokens follow in descending frequency, ties broken lexicographically.
class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens, bool char_level = false);

  std::size_t size() const noexcept { return tokens_.size(); }
  bool char_level() const noexcept { return char_level_; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  int index(std::string_view token) const;  // kUnk when absent
  const std::string& token(int index) const;

  // Splits on whitespace (or into UTF-8 code points in char mode, dropping
  // whitespace) and wraps the result in BOS/EOS. max_len counts sentinels;
  // 0 disables the check.
  TokenSeq encode(std::string_view sentence, std::size_t max_len = 0) const;
  std::string decode(const TokenSeq& seq) const;

  // One token per line in index order.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path, bool char_level = false);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  bool char_level_ = false;
};

std::vector<std::string> split_tokens(std::string_view sentence, bool char_level);

// max_size counts the reserved slots, so max_size = 6 keeps one corpus token.
Vocabulary build_vocab(const std::vector<std::string>& lines, std::size_t max_size, bool char_level = false);

std::vector<std::string> read_lines(const std::string& path);

}  // namespace slm
