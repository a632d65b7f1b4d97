#include "slm/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include "slm/errors.hpp"
#include "slm/objectives.hpp"

namespace slm {

void TrainConfig::validate() const {
  if (total_steps == 0) throw ContractError("train: total_steps must be positive");
  if (warmup_steps >= total_steps) throw ContractError("train: warmup_steps must be below total_steps");
  if (lr_peak <= 0.0) throw ContractError("train: lr_peak must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) throw ContractError("train: betas must be in [0,1)");
  if (eps <= 0.0) throw ContractError("train: eps must be positive");
  if (batch_tokens == 0) throw ContractError("train: batch_tokens must be positive");
  if (packing == Packing::Stream && stream_len == 0) throw ContractError("train: stream_len must be positive");
  if (mask_rate <= 0.0 || mask_rate > 1.0) throw ContractError("train: mask_rate must be in (0,1]");
  if (log_interval == 0) throw ContractError("train: log_interval must be positive");
}

double lr_at(std::size_t step, const TrainConfig& cfg) {
  if (step > cfg.total_steps) {
    throw ContractError("lr_at: step " + std::to_string(step) + " beyond total_steps " +
                        std::to_string(cfg.total_steps));
  }
  if (step <= cfg.warmup_steps) {
    if (cfg.warmup_steps == 0) return cfg.lr_peak;
    return cfg.lr_peak * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  }
  return cfg.lr_peak * static_cast<double>(cfg.total_steps - step) /
         static_cast<double>(cfg.total_steps - cfg.warmup_steps);
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state, std::size_t step,
               double lr, const TrainConfig& cfg) {
  if (params.size() != grads.size()) throw DimensionError("adam: parameter and gradient counts differ");
  if (step == 0) throw ContractError("adam: steps are 1-based");
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i]->shape()) throw DimensionError("adam: gradient shape mismatch");
    if (!grads[i].all_finite()) {
      throw NumericError("adam: non-finite gradient at step " + std::to_string(step));
    }
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    const Tensor& g = grads[i];
    const double decay = p.rank() >= 2 ? cfg.weight_decay : 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps) + decay * p[j]);
    }
  }
}

double clip_grad_norm(std::span<Tensor> grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor& g : grads) {
    for (double v : g.data()) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Tensor& g : grads) {
      for (double& v : g.data()) v *= s;
    }
  }
  return norm;
}

BatchPlan make_batches(std::span<const TokenSeq> corpus, const TrainConfig& cfg, std::size_t max_len,
                       std::size_t epoch) {
  if (corpus.empty()) throw ContractError("make_batches: empty corpus");
  BatchPlan plan;
  std::vector<TokenSeq> samples;
  if (cfg.packing == Packing::Sentence) {
    for (const TokenSeq& s : corpus) {
      if (s.n() > max_len || s.real_count() == 0) {
        ++plan.skipped;
        continue;
      }
      samples.push_back(s);
    }
  } else {
    if (cfg.stream_len + 2 > max_len) {
      throw ContractError("make_batches: stream_len + 2 exceeds max_len " + std::to_string(max_len));
    }
    std::vector<int> flat;
    for (const TokenSeq& s : corpus) {
      flat.insert(flat.end(), s.real().begin(), s.real().end());
      flat.push_back(kEos);
    }
    for (std::size_t start = 0; start < flat.size(); start += cfg.stream_len) {
      const std::size_t end = std::min(flat.size(), start + cfg.stream_len);
      samples.push_back(TokenSeq::from_real(std::span<const int>(flat).subspan(start, end - start)));
    }
  }
  if (samples.empty()) throw ContractError("make_batches: every sentence was skipped");

  std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + epoch);
  std::shuffle(samples.begin(), samples.end(), rng);

  Batch current;
  std::size_t tokens = 0;
  for (TokenSeq& s : samples) {
    if (!current.empty() && tokens + s.n() > cfg.batch_tokens) {
      plan.batches.push_back(std::move(current));
      current.clear();
      tokens = 0;
    }
    tokens += s.n();
    current.push_back(std::move(s));
  }
  if (!current.empty()) plan.batches.push_back(std::move(current));
  return plan;
}

BatchStream::BatchStream(std::vector<TokenSeq> corpus, TrainConfig cfg, std::size_t max_len)
    : corpus_(std::move(corpus)), cfg_(cfg), max_len_(max_len) {
  plan_ = make_batches(corpus_, cfg_, max_len_, epoch_);
  skipped_ = plan_.skipped;
}

const Batch& BatchStream::next() {
  if (cursor_ == plan_.batches.size()) {
    ++epoch_;
    plan_ = make_batches(corpus_, cfg_, max_len_, epoch_);
    cursor_ = 0;
  }
  return plan_.batches[cursor_++];
}

TrainResult train(ModelKind kind, const ModelConfig& model_cfg, const TrainConfig& cfg,
                  std::span<const TokenSeq> corpus, const CheckpointFn& on_checkpoint, const LogFn& on_log) {
  return train_from(init_model(model_cfg, cfg.seed, kind), cfg, corpus, on_checkpoint, on_log);
}

TrainResult train_from(ModelParams params, const TrainConfig& cfg, std::span<const TokenSeq> corpus,
                       const CheckpointFn& on_checkpoint, const LogFn& on_log) {
  cfg.validate();
  TrainResult result;
  BatchStream stream(std::vector<TokenSeq>(corpus.begin(), corpus.end()), cfg, params.config.max_len);
  result.skipped = stream.skipped();

  std::mt19937_64 rng(cfg.seed ^ 0xD1B54A32D192ED03ULL);
  const ObjectiveOptions opts{params.config.dropout, cfg.mask_rate, cfg.bert_masking};
  AdamState state;
  std::vector<Tensor*> tensors;
  for (auto& nt : params.named()) tensors.push_back(nt.tensor);

  for (std::size_t step = 1; step <= cfg.total_steps; ++step) {
    const Batch& batch = stream.next();
    LossAndGrads lg = loss_and_grads(params, batch, opts, &rng);
    clip_grad_norm(lg.grads, cfg.clip_norm);
    const double lr = lr_at(step, cfg);
    adam_step(tensors, lg.grads, state, step, lr, cfg);
    result.curve.push_back({step, lr, lg.loss});
    if (on_log && (step % cfg.log_interval == 0 || step == cfg.total_steps)) on_log(result.curve.back());
    if (on_checkpoint && cfg.checkpoint_interval && step % cfg.checkpoint_interval == 0 && step != cfg.total_steps) {
      on_checkpoint(step, params);
    }
  }
  if (on_checkpoint) on_checkpoint(cfg.total_steps, params);
  result.params = std::move(params);
  return result;
}

std::string loss_curve_csv(std::span<const LossPoint> curve, std::size_t log_interval) {
  std::ostringstream out;
  out.precision(17);
  out << "step,lr,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const LossPoint& p = curve[i];
    if (p.step % log_interval == 0 || i + 1 == curve.size()) out << p.step << ',' << p.lr << ',' << p.loss << '\n';
  }
  return out.str();
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ContractError("config: invalid value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ContractError("config: invalid boolean '" + value + "' for " + key);
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig rc;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<std::string, std::string>> entries;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ContractError("config line " + std::to_string(lineno) + ": expected key=value");
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  // A preset sets the model shape first; explicit keys override it.
  for (const auto& [k, v] : entries) {
    if (k == "preset") {
      rc.model = ModelConfig::preset(v, rc.model.vocab_size, rc.model.max_len);
    }
  }
  for (const auto& [k, v] : entries) {
    using sz = std::size_t;
    if (k == "preset") continue;
    else if (k == "lr_peak") rc.train.lr_peak = parse_number<double>(k, v);
    else if (k == "beta1") rc.train.beta1 = parse_number<double>(k, v);
    else if (k == "beta2") rc.train.beta2 = parse_number<double>(k, v);
    else if (k == "eps") rc.train.eps = parse_number<double>(k, v);
    else if (k == "weight_decay") rc.train.weight_decay = parse_number<double>(k, v);
    else if (k == "warmup_steps") rc.train.warmup_steps = parse_number<sz>(k, v);
    else if (k == "total_steps") rc.train.total_steps = parse_number<sz>(k, v);
    else if (k == "batch_tokens") rc.train.batch_tokens = parse_number<sz>(k, v);
    else if (k == "packing") {
      if (v == "sentence") rc.train.packing = Packing::Sentence;
      else if (v == "stream") rc.train.packing = Packing::Stream;
      else throw ContractError("config: packing must be sentence or stream");
    }
    else if (k == "stream_len") rc.train.stream_len = parse_number<sz>(k, v);
    else if (k == "seed") rc.train.seed = parse_number<std::uint64_t>(k, v);
    else if (k == "clip_norm") rc.train.clip_norm = parse_number<double>(k, v);
    else if (k == "mask_rate") rc.train.mask_rate = parse_number<double>(k, v);
    else if (k == "bert_masking") rc.train.bert_masking = parse_bool(k, v);
    else if (k == "log_interval") rc.train.log_interval = parse_number<sz>(k, v);
    else if (k == "checkpoint_interval") rc.train.checkpoint_interval = parse_number<sz>(k, v);
    else if (k == "layers") rc.model.layers = parse_number<sz>(k, v);
    else if (k == "d_model") rc.model.d_model = parse_number<sz>(k, v);
    else if (k == "heads") rc.model.heads = parse_number<sz>(k, v);
    else if (k == "d_ff") rc.model.d_ff = parse_number<sz>(k, v);
    else if (k == "max_len") rc.model.max_len = parse_number<sz>(k, v);
    else if (k == "dropout") rc.model.dropout = parse_number<double>(k, v);
    else if (k == "tie_embeddings") rc.model.tie_embeddings = parse_bool(k, v);
    else if (k == "vocab_max") rc.vocab_max = parse_number<sz>(k, v);
    else if (k == "char_level") rc.char_level = parse_bool(k, v);
    else throw ContractError("config: unknown key '" + k + "'");
  }
  return rc;
}

}  // namespace slm
