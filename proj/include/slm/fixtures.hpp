#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace slm::fixtures {

// "a b a b ..." or "b a b a ..." with the first symbol uniform. The first
// token has entropy ln 2 given no context and 0 given any neighbour.
std::vector<std::string> alternating_corpus(std::size_t sentences, std::size_t length, std::uint64_t seed);

// Tokens w0..w{symbols-1}. The first token is uniform; each next token is
// (previous + 1) mod symbols with probability p_follow, otherwise uniform.
std::vector<std::string> markov_corpus(std::size_t sentences, std::size_t min_len, std::size_t max_len,
                                       std::size_t symbols, double p_follow, std::uint64_t seed);

}  // namespace slm::fixtures
