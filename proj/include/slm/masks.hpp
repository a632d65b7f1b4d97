#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "slm/tensor.hpp"

namespace slm {

// Attention permissions for the three streams of a length-n sequence.
//
//   forward[i][j]  = j <= i          content stream reading left context
//   backward[i][j] = j >= i          content stream reading right context
//   query[i][j]    = j < i           columns 0..n-1 address forward states
//   query[i][n+j]  = j > i           columns n..2n-1 address backward states
//
// Query row i never addresses position i in either half.
struct MaskSet {
  std::size_t n = 0;
  BoolMatrix forward;
  BoolMatrix backward;
  BoolMatrix query;
};

// Sentinels (BOS/EOS) are part of n, so the shortest valid length is 3.
inline constexpr std::size_t kMinSequenceLength = 3;

MaskSet build_masks(std::size_t n);

// Causal and anti-causal masks used by single-stream encoders, plus the
// all-visible mask for masked-LM passes.
BoolMatrix causal_mask(std::size_t n);
BoolMatrix anticausal_mask(std::size_t n);
BoolMatrix full_mask(std::size_t n);

struct LeakageReport {
  bool passed = true;
  std::size_t layers = 0;
  // Populated on failure.
  std::optional<std::size_t> failing_depth;
  std::optional<std::size_t> failing_position;
  std::string message;
};

// Tracks which input tokens each stream state depends on through `layers`
// rounds of propagation. Content streams start from their own token, the
// query stream starts empty (position-only input). Each round:
//   fwd'[i]   = fwd[i]   U  {fwd[j] : forward[i][j]}
//   bwd'[i]   = bwd[i]   U  {bwd[j] : backward[i][j]}
//   query'[i] = query[i] U  {fwd[j] : query[i][j]} U {bwd[j] : query[i][n+j]}
// Passes iff no query state ever reaches its own token and the depth-1 query
// set of row i is exactly {j != i}.
LeakageReport verify_no_leakage(const MaskSet& masks, std::size_t layers);

// The cycle a bidirectional content stream creates: both content streams
// attend everywhere, the query mask is unchanged.
MaskSet corrupted_full_content_masks(std::size_t n);

enum class MaskFormat { Ascii, Csv };

// '#' = allowed, '.' = blocked in ascii form; 1/0 in csv form.
std::string dump_masks(const MaskSet& masks, MaskFormat format);

}  // namespace slm
