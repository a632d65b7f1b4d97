#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace slm {

// Reserved vocabulary indices shared by every model and file format.
inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kMask = 4;
inline constexpr int kNumReserved = 5;

// A sentence wrapped in BOS ... EOS. Real tokens occupy [1, n-1).
class TokenSeq {
 public:
  TokenSeq() : tokens_{kBos, kEos} {}
  // Takes the full sequence including sentinels; throws ContractError if the
  // sentinels are missing.
  explicit TokenSeq(std::vector<int> tokens);

  static TokenSeq from_real(std::span<const int> real);

  const std::vector<int>& tokens() const noexcept { return tokens_; }
  std::size_t n() const noexcept { return tokens_.size(); }
  std::size_t real_begin() const noexcept { return 1; }
  std::size_t real_end() const noexcept { return tokens_.size() - 1; }
  std::size_t real_count() const noexcept { return tokens_.size() - 2; }
  std::span<const int> real() const { return std::span<const int>(tokens_).subspan(1, real_count()); }

  int operator[](std::size_t i) const { return tokens_[i]; }
  // Returns a copy with position i replaced.
  TokenSeq with(std::size_t i, int token) const;

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;

 private:
  std::vector<int> tokens_;
};

}  // namespace slm
