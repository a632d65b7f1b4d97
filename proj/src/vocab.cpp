#include "slm/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "slm/errors.hpp"

namespace slm {

namespace {

const std::vector<std::string> kReservedNames = {"<pad>", "<s>", "</s>", "<unk>", "<mask>"};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

}  // namespace

std::vector<std::string> split_tokens(std::string_view sentence, bool char_level) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < sentence.size()) {
    if (is_space(sentence[i])) {
      ++i;
      continue;
    }
    if (char_level) {
      const std::size_t len = std::min(utf8_length(static_cast<unsigned char>(sentence[i])), sentence.size() - i);
      out.emplace_back(sentence.substr(i, len));
      i += len;
    } else {
      std::size_t j = i;
      while (j < sentence.size() && !is_space(sentence[j])) ++j;
      out.emplace_back(sentence.substr(i, j - i));
      i = j;
    }
  }
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens, bool char_level) : char_level_(char_level) {
  tokens_ = kReservedNames;
  std::size_t start = 0;
  // Accept lists that already carry the reserved header.
  if (tokens.size() >= kReservedNames.size() &&
      std::equal(kReservedNames.begin(), kReservedNames.end(), tokens.begin())) {
    start = kReservedNames.size();
  }
  tokens_.insert(tokens_.end(), tokens.begin() + static_cast<std::ptrdiff_t>(start), tokens.end());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw ContractError("duplicate vocabulary entry '" + tokens_[i] + "'");
    }
  }
}

int Vocabulary::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= tokens_.size()) {
    throw IndexError("token index " + std::to_string(index) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(index)];
}

TokenSeq Vocabulary::encode(std::string_view sentence, std::size_t max_len) const {
  std::vector<int> ids;
  for (const auto& tok : split_tokens(sentence, char_level_)) ids.push_back(index(tok));
  if (max_len != 0 && ids.size() + 2 > max_len) {
    std::string shown(sentence.substr(0, 60));
    throw LengthError("sentence '" + shown + (sentence.size() > 60 ? "...'" : "'") + " has " +
                      std::to_string(ids.size()) + " tokens; the model accepts at most " +
                      std::to_string(max_len - 2));
  }
  return TokenSeq::from_real(ids);
}

std::string Vocabulary::decode(const TokenSeq& seq) const {
  std::string out;
  for (int id : seq.real()) {
    if (!out.empty() && !char_level_) out += ' ';
    out += token(id);
  }
  return out;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write vocabulary '" + path + "'");
  for (const auto& t : tokens_) f << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path, bool char_level) {
  return Vocabulary(read_lines(path), char_level);
}

Vocabulary build_vocab(const std::vector<std::string>& lines, std::size_t max_size, bool char_level) {
  std::map<std::string, std::size_t> counts;
  for (const auto& line : lines) {
    for (auto& tok : split_tokens(line, char_level)) ++counts[std::move(tok)];
  }
  if (counts.empty()) throw ContractError("cannot build a vocabulary from an empty corpus");
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // std::map iteration is lexicographic, so a stable sort keeps ties ordered.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  for (const auto& [tok, count] : ranked) {
    if (kReservedNames.size() + tokens.size() >= max_size) break;
    if (std::find(kReservedNames.begin(), kReservedNames.end(), tok) != kReservedNames.end()) continue;
    tokens.push_back(tok);
  }
  return Vocabulary(std::move(tokens), char_level);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace slm
