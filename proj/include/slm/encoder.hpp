#pragma once

// Tape-level building blocks shared by the SLM and baseline models. Not part
// of the stable surface; use model.hpp / baselines.hpp instead.

#include <random>
#include <span>
#include <vector>

#include "slm/autograd.hpp"
#include "slm/masks.hpp"
#include "slm/model.hpp"

namespace slm::detail {

struct BoundLayer {
  Var wq, bq, wk, bk, wv, bv, wo, bo;
  Var ln1_gain, ln1_bias;
  Var ff1_w, ff1_b, ff2_w, ff2_b;
  Var ln2_gain, ln2_bias;
};

struct BoundEncoder {
  Var token_embed;
  Var pos_embed;
  std::vector<BoundLayer> layers;
};

struct BoundModel {
  const ModelParams* params = nullptr;
  EncoderShape shape{};
  std::vector<BoundEncoder> encoders;
  Var head_w;  // token_embed when tied
  Var head_b;
  bool tied = false;
};

BoundModel bind(Tape& tape, const ModelParams& params);

// Dropout is applied only when rng is non-null.
struct DropoutCtx {
  std::mt19937_64* rng = nullptr;
  double p = 0.0;
};

struct TripleStreams {
  std::vector<Var> fwd, bwd, query;  // size layers + 1
};

Var token_inputs(const BoundEncoder& enc, std::span<const int> tokens);
Var position_inputs(const BoundEncoder& enc, std::size_t n);

TripleStreams run_triple_stream(const BoundModel& model, std::span<const int> tokens, const DropoutCtx& drop);

// Single content stream under an arbitrary square mask; returns final states.
Var run_single_stream(const BoundModel& model, const BoundEncoder& enc, std::span<const int> tokens,
                      const BoolMatrix& mask, const DropoutCtx& drop);

Var output_head(const BoundModel& model, Var states);

void count_forward_pass();

void check_length(const ModelParams& params, std::size_t n);

}  // namespace slm::detail
