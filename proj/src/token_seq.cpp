#include "slm/token_seq.hpp"

#include <string>

#include "slm/errors.hpp"

namespace slm {

TokenSeq::TokenSeq(std::vector<int> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_.front() != kBos || tokens_.back() != kEos) {
    throw ContractError("token sequence must start with BOS and end with EOS");
  }
}

TokenSeq TokenSeq::from_real(std::span<const int> real) {
  std::vector<int> t;
  t.reserve(real.size() + 2);
  t.push_back(kBos);
  t.insert(t.end(), real.begin(), real.end());
  t.push_back(kEos);
  return TokenSeq(std::move(t));
}

TokenSeq TokenSeq::with(std::size_t i, int token) const {
  if (i >= tokens_.size()) throw IndexError("position " + std::to_string(i) + " outside sequence");
  TokenSeq copy = *this;
  copy.tokens_[i] = token;
  return copy;
}

}  // namespace slm
