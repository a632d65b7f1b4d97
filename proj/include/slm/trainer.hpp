#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "slm/model.hpp"

namespace slm {

enum class Packing { Sentence, Stream };

struct TrainConfig {
  double lr_peak = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-6;
  double weight_decay = 0.01;
  std::size_t warmup_steps = 100;
  std::size_t total_steps = 2000;
  std::size_t batch_tokens = 2048;
  Packing packing = Packing::Sentence;
  std::size_t stream_len = 64;
  std::uint64_t seed = 1;
  double clip_norm = 1.0;  // <= 0 disables clipping
  double mask_rate = 0.15;
  bool bert_masking = false;
  std::size_t log_interval = 10;
  std::size_t checkpoint_interval = 0;  // 0: only at the end

  void validate() const;
};

// Linear warmup 0 -> lr_peak over warmup_steps, then linear decay to 0 at
// total_steps.
double lr_at(std::size_t step, const TrainConfig& cfg);

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

// One bias-corrected Adam update at 1-based `step` with learning rate `lr`.
// Weight decay is decoupled (p -= lr * wd * p) and applies only to tensors of
// rank >= 2; biases and layer-norm vectors are not decayed.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state, std::size_t step,
               double lr, const TrainConfig& cfg);

// Scales grads in place so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(std::span<Tensor> grads, double max_norm);

using Batch = std::vector<TokenSeq>;

struct BatchPlan {
  std::vector<Batch> batches;
  std::size_t skipped = 0;  // sentences longer than max_len or empty
};

// Sentence mode: one sentence per sample. Stream mode: real tokens of every
// sentence, each followed by an EOS separator, concatenated in corpus order,
// cut into stream_len chunks and re-wrapped with BOS/EOS. Samples are then
// shuffled with (seed, epoch) and packed greedily up to batch_tokens
// (counting sentinels).
BatchPlan make_batches(std::span<const TokenSeq> corpus, const TrainConfig& cfg, std::size_t max_len,
                       std::size_t epoch);

// Endless batch source cycling through epochs.
class BatchStream {
 public:
  BatchStream(std::vector<TokenSeq> corpus, TrainConfig cfg, std::size_t max_len);
  const Batch& next();
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t skipped() const noexcept { return skipped_; }

 private:
  std::vector<TokenSeq> corpus_;
  TrainConfig cfg_;
  std::size_t max_len_;
  std::size_t epoch_ = 0;
  std::size_t cursor_ = 0;
  std::size_t skipped_ = 0;
  BatchPlan plan_;
};

struct LossPoint {
  std::size_t step;
  double lr;
  double loss;
};

struct TrainResult {
  ModelParams params;
  std::vector<LossPoint> curve;  // every step
  std::size_t skipped = 0;
};

using CheckpointFn = std::function<void(std::size_t step, const ModelParams&)>;
using LogFn = std::function<void(const LossPoint&)>;

TrainResult train(ModelKind kind, const ModelConfig& model_cfg, const TrainConfig& cfg,
                  std::span<const TokenSeq> corpus, const CheckpointFn& on_checkpoint = {},
                  const LogFn& on_log = {});

// Continues training existing parameters (used by tests and fine-tuning).
TrainResult train_from(ModelParams params, const TrainConfig& cfg, std::span<const TokenSeq> corpus,
                       const CheckpointFn& on_checkpoint = {}, const LogFn& on_log = {});

// step,lr,loss rows at the log interval (and the final step).
std::string loss_curve_csv(std::span<const LossPoint> curve, std::size_t log_interval);

// Flat key=value file covering TrainConfig and ModelConfig fields plus
// vocab_max, char_level and preset. '#' starts a comment.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::size_t vocab_max = 2000;
  bool char_level = false;
};

RunConfig parse_run_config(const std::string& text);

}  // namespace slm
