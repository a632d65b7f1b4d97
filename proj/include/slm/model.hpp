#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slm/tensor.hpp"
#include "slm/token_seq.hpp"

namespace slm {

enum class ModelKind { Slm, Clm, Mlm, BiLm };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelConfig {
  std::size_t layers = 2;
  std::size_t d_model = 64;
  std::size_t heads = 2;
  std::size_t d_ff = 128;
  std::size_t vocab_size = 0;
  std::size_t max_len = 64;
  double dropout = 0.1;
  // Output head reuses token_embed^T instead of its own matrix.
  bool tie_embeddings = false;

  void validate(ModelKind kind = ModelKind::Slm) const;

  // "base": 4 layers, d_model 96, 6 heads, d_ff 384.
  // "small": 2 layers, d_model 64, 4 heads, d_ff 256.
  static ModelConfig preset(std::string_view name, std::size_t vocab_size, std::size_t max_len);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Width of one transformer stack. Bi-LM runs two stacks at half width.
struct EncoderShape {
  std::size_t layers;
  std::size_t d_model;
  std::size_t heads;
  std::size_t d_ff;
};

EncoderShape encoder_shape(const ModelConfig& cfg, ModelKind kind);

struct LayerParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln1_gain, ln1_bias;
  Tensor ff1_w, ff1_b, ff2_w, ff2_b;
  Tensor ln2_gain, ln2_bias;
};

struct EncoderParams {
  Tensor token_embed;  // [V, d]
  Tensor pos_embed;    // [max_len, d]
  std::vector<LayerParams> layers;
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

struct ConstNamedTensor {
  std::string name;
  const Tensor* tensor;
};

// All learnable state of one model. Every layer holds a single parameter set
// that serves all of its streams.
struct ModelParams {
  ModelKind kind = ModelKind::Slm;
  ModelConfig config;
  std::uint64_t seed = 0;
  std::vector<EncoderParams> encoders;  // Bi-LM: [forward, backward]
  Tensor head_w;                        // [d_model, V]; empty when tied
  Tensor head_b;                        // [V]

  // Fixed traversal order used by checkpoints, optimizers and gradient checks.
  std::vector<NamedTensor> named();
  std::vector<ConstNamedTensor> named() const;
  std::size_t parameter_count() const;
};

// Weight matrices ~ N(0, 0.02); biases and layer-norm offsets 0; gains 1.
ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed, ModelKind kind = ModelKind::Slm);

// Per-layer stream states, index 0 is the embedding layer.
struct StreamStates {
  std::vector<Tensor> fwd;
  std::vector<Tensor> bwd;
  std::vector<Tensor> query;
};

struct ForwardResult {
  Tensor logits;  // [n, V], row i predicts token i
  StreamStates states;
};

struct SentenceScore {
  double total = 0.0;
  // log P(token | context) for each real token, in order.
  std::vector<double> per_token;
  // Argmax of each real position's distribution (lowest index on ties).
  std::vector<int> predicted;
  // Full log-probability row behind each per_token entry.
  std::vector<std::vector<double>> log_probs;
  // log P(EOS | prefix); only causal scoring fills it, and it is part of total.
  double eos_logprob = 0.0;
  std::size_t passes = 0;
};

// Encoder invocations on the calling thread since the last reset. One scorer
// pass (including a Bi-LM's paired directional stacks) counts once.
std::size_t forward_pass_count();
void reset_forward_pass_count();

// Triple-stream forward on an SLM model with dropout disabled.
ForwardResult forward_pass(const ModelParams& params, const TokenSeq& seq);

// Sums log P(y_i | y_<i, y_>i) over the real tokens from a single pass.
SentenceScore score_sentence(const ModelParams& params, const TokenSeq& seq);

// Mean negative log-likelihood over all real-token positions of the batch.
double slm_loss(const ModelParams& params, std::span<const TokenSeq> batch);

}  // namespace slm
