#include "slm/fixtures.hpp"

#include <random>

namespace slm::fixtures {

std::vector<std::string> alternating_corpus(std::size_t sentences, std::size_t length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::string> out;
  for (std::size_t s = 0; s < sentences; ++s) {
    bool a = coin(rng);
    std::string line;
    for (std::size_t i = 0; i < length; ++i) {
      if (i) line += ' ';
      line += a ? 'a' : 'b';
      a = !a;
    }
    out.push_back(std::move(line));
  }
  return out;
}

std::vector<std::string> markov_corpus(std::size_t sentences, std::size_t min_len, std::size_t max_len,
                                       std::size_t symbols, double p_follow, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len_dist(min_len, max_len);
  std::uniform_int_distribution<std::size_t> sym(0, symbols - 1);
  std::bernoulli_distribution follow(p_follow);
  std::vector<std::string> out;
  for (std::size_t s = 0; s < sentences; ++s) {
    const std::size_t len = len_dist(rng);
    std::size_t cur = sym(rng);
    std::string line;
    for (std::size_t i = 0; i < len; ++i) {
      if (i) {
        line += ' ';
        cur = follow(rng) ? (cur + 1) % symbols : sym(rng);
      }
      line += "w" + std::to_string(cur);
    }
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace slm::fixtures
