#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "slm/model.hpp"

namespace slm {

struct ObjectiveOptions {
  // Applied only when an rng is supplied (training).
  double dropout = 0.0;
  // MLM: fraction of real tokens masked per sample (at least one).
  double mask_rate = 0.15;
  // MLM: 80/10/10 mask/random/keep corruption instead of plain MASK.
  bool bert_masking = false;
};

struct MlmSample {
  std::vector<int> input;              // corrupted token sequence
  std::vector<std::size_t> positions;  // predicted positions, ascending
  std::vector<int> targets;            // original tokens at those positions
};

// Picks max(1, round(mask_rate * m)) real positions and corrupts them.
MlmSample mlm_corrupt(const TokenSeq& seq, const ObjectiveOptions& opts, std::size_t vocab_size,
                      std::mt19937_64& rng);

struct LossAndGrads {
  double loss = 0.0;
  std::vector<Tensor> grads;  // aligned with params.named()
};

// Training objective for params.kind, averaged over predicted positions of
// the whole batch:
//   slm  - every real token from the query stream
//   clm  - every real token and EOS from the shifted causal stream
//   mlm  - masked real tokens only
//   bilm - every real token from the concatenated directional states
// The rng drives dropout and MLM masking; MLM requires one.
LossAndGrads loss_and_grads(const ModelParams& params, std::span<const TokenSeq> batch, const ObjectiveOptions& opts,
                            std::mt19937_64* rng);

double batch_loss(const ModelParams& params, std::span<const TokenSeq> batch, const ObjectiveOptions& opts,
                  std::mt19937_64* rng);

}  // namespace slm
