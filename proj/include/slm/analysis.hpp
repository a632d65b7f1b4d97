#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "slm/baselines.hpp"

namespace slm {

struct PositionProfile {
  std::size_t n = 0;  // real tokens per sentence
  std::vector<double> per_position_ce;
  std::size_t sample_count = 0;
};

// Mean of -per_token[i] over the subset; every sentence must have n real
// tokens.
PositionProfile position_profile(const Scorer& scorer, std::span<const TokenSeq> subset);

// Fraction of real positions whose argmax equals the true token. Argmax ties
// go to the lowest vocabulary index.
double token_accuracy(const Scorer& scorer, std::span<const TokenSeq> subset, std::size_t n);

// Sentences of `subset` whose real length is n.
std::vector<TokenSeq> sentences_of_length(std::span<const TokenSeq> corpus, std::size_t n);

std::string profile_csv(const PositionProfile& profile);
// Horizontal bar per position, scaled to the largest entry.
std::string profile_ascii(const PositionProfile& profile, std::size_t width = 50);

// For each n: CLM, MLM at each k, Bi-LM, SLM.
std::vector<PassCost> cost_report(std::span<const std::size_t> n_values, std::span<const std::size_t> k_values);
std::string cost_report_table(std::span<const PassCost> rows);

}  // namespace slm
