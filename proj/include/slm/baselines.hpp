#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slm/model.hpp"

namespace slm {

// Disjoint subsets of the real positions of a sentence; each is masked in
// one MLM pass. Positions are absolute indices into the TokenSeq.
struct MlmPartition {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> subsets;
};

// Shuffles the real positions with `seed` and cuts them into ceil(m/k)
// chunks of size k (the last may be shorter).
MlmPartition make_mlm_partition(const TokenSeq& seq, std::size_t k, std::uint64_t seed);

// Tokens masked per pass: a fixed count, or ceil(m / divisor) per sentence
// when given as a fraction "n/D".
struct MlmK {
  std::size_t count = 1;
  std::size_t divisor = 0;

  std::size_t resolve(std::size_t real_tokens) const;
  static MlmK parse(const std::string& text);
  std::string str() const;
};

// log P(y_i | y_<i) read from the state at i-1; scores real tokens and EOS.
SentenceScore clm_score(const ModelParams& params, const TokenSeq& seq);

// Pseudo-log-likelihood with k tokens masked per pass.
SentenceScore mlm_score(const ModelParams& params, const TokenSeq& seq, std::size_t k, std::uint64_t seed);

// Forward stack at i-1 concatenated with backward stack at i+1.
SentenceScore bilm_score(const ModelParams& params, const TokenSeq& seq);

struct PassCost {
  ModelKind kind = ModelKind::Clm;
  std::size_t n = 0;
  std::size_t k = 0;  // MLM only
  std::size_t passes = 0;
  std::size_t relative_compute = 0;  // multiple of one CLM pass
};

PassCost pass_cost(ModelKind kind, std::size_t n, std::optional<std::size_t> k = std::nullopt);

using Scorer = std::function<SentenceScore(const TokenSeq&)>;

// Dispatches on params.kind. The MLM seed is mixed with a per-call counter
// only through `seed`, so identical calls give identical partitions.
Scorer make_scorer(const ModelParams& params, MlmK k = {}, std::uint64_t seed = 0);

}  // namespace slm
