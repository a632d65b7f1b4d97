#include "slm/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slm/encoder.hpp"
#include "slm/errors.hpp"

namespace slm {

MlmSample mlm_corrupt(const TokenSeq& seq, const ObjectiveOptions& opts, std::size_t vocab_size,
                      std::mt19937_64& rng) {
  const std::size_t m = seq.real_count();
  if (m == 0) throw ContractError("mlm: sentence has no real tokens");
  const auto want = static_cast<std::size_t>(std::llround(opts.mask_rate * static_cast<double>(m)));
  const std::size_t count = std::clamp<std::size_t>(want, 1, m);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), seq.real_begin());
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, m - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  MlmSample out;
  out.positions.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(out.positions.begin(), out.positions.end());
  out.input = seq.tokens();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> random_token(kNumReserved, static_cast<int>(vocab_size) - 1);
  for (std::size_t pos : out.positions) {
    out.targets.push_back(seq[pos]);
    if (!opts.bert_masking) {
      out.input[pos] = kMask;
      continue;
    }
    const double r = u(rng);
    if (r < 0.8) {
      out.input[pos] = kMask;
    } else if (r < 0.9) {
      out.input[pos] = random_token(rng);
    }
  }
  return out;
}

namespace {

struct SampleLoss {
  Var mean_ce;
  std::size_t count;
};

SampleLoss sample_loss(const detail::BoundModel& model, const TokenSeq& seq, const ObjectiveOptions& opts,
                       std::mt19937_64* rng) {
  const ModelParams& params = *model.params;
  detail::check_length(params, seq.n());
  const detail::DropoutCtx drop{opts.dropout > 0.0 ? rng : nullptr, opts.dropout};
  const std::size_t n = seq.n();

  std::vector<int> targets;
  std::vector<std::size_t> rows;
  switch (params.kind) {
    case ModelKind::Slm: {
      const auto st = detail::run_triple_stream(model, seq.tokens(), drop);
      for (std::size_t i = seq.real_begin(); i < seq.real_end(); ++i) {
        rows.push_back(i);
        targets.push_back(seq[i]);
      }
      Var logits = detail::output_head(model, ops::select_rows(st.query.back(), rows));
      return {ops::cross_entropy(logits, targets), targets.size()};
    }
    case ModelKind::Clm: {
      Var h = detail::run_single_stream(model, model.encoders[0], seq.tokens(), causal_mask(n), drop);
      for (std::size_t i = 1; i < n; ++i) {
        rows.push_back(i - 1);
        targets.push_back(seq[i]);
      }
      Var logits = detail::output_head(model, ops::select_rows(h, rows));
      return {ops::cross_entropy(logits, targets), targets.size()};
    }
    case ModelKind::Mlm: {
      if (!rng) throw ContractError("mlm objective needs a random generator for masking");
      const MlmSample sample = mlm_corrupt(seq, opts, params.config.vocab_size, *rng);
      rows = sample.positions;
      targets = sample.targets;
      const std::vector<int>& input = sample.input;
      Var h = detail::run_single_stream(model, model.encoders[0], input, full_mask(n), drop);
      Var logits = detail::output_head(model, ops::select_rows(h, rows));
      return {ops::cross_entropy(logits, targets), targets.size()};
    }
    case ModelKind::BiLm: {
      Var hf = detail::run_single_stream(model, model.encoders[0], seq.tokens(), causal_mask(n), drop);
      Var hb = detail::run_single_stream(model, model.encoders[1], seq.tokens(), anticausal_mask(n), drop);
      std::vector<std::size_t> right;
      for (std::size_t i = seq.real_begin(); i < seq.real_end(); ++i) {
        rows.push_back(i - 1);
        right.push_back(i + 1);
        targets.push_back(seq[i]);
      }
      const std::vector<Var> parts{ops::select_rows(hf, rows), ops::select_rows(hb, right)};
      Var logits = detail::output_head(model, ops::concat_cols(parts));
      return {ops::cross_entropy(logits, targets), targets.size()};
    }
  }
  throw ContractError("unknown model kind");
}

Var record_batch_loss(const detail::BoundModel& model, std::span<const TokenSeq> batch,
                      const ObjectiveOptions& opts, std::mt19937_64* rng) {
  if (batch.empty()) throw ContractError("loss: empty batch");
  std::vector<SampleLoss> parts;
  std::size_t total = 0;
  for (const TokenSeq& seq : batch) {
    parts.push_back(sample_loss(model, seq, opts, rng));
    total += parts.back().count;
  }
  Var loss{};
  for (std::size_t s = 0; s < parts.size(); ++s) {
    Var weighted = ops::scale(parts[s].mean_ce, static_cast<double>(parts[s].count) / static_cast<double>(total));
    loss = s == 0 ? weighted : ops::add(loss, weighted);
  }
  return loss;
}

}  // namespace

LossAndGrads loss_and_grads(const ModelParams& params, std::span<const TokenSeq> batch, const ObjectiveOptions& opts,
                            std::mt19937_64* rng) {
  Tape tape(true);
  const detail::BoundModel model = detail::bind(tape, params);
  const Var loss = record_batch_loss(model, batch, opts, rng);
  tape.backward(loss);

  // bind() registers parameters in the same order as named().
  LossAndGrads out;
  out.loss = loss.value().item();
  const auto named = params.named();
  std::vector<Var> vars;
  for (const auto& enc : model.encoders) {
    vars.push_back(enc.token_embed);
    vars.push_back(enc.pos_embed);
    for (const auto& l : enc.layers) {
      vars.insert(vars.end(), {l.wq, l.bq, l.wk, l.bk, l.wv, l.bv, l.wo, l.bo, l.ln1_gain, l.ln1_bias, l.ff1_w,
                               l.ff1_b, l.ff2_w, l.ff2_b, l.ln2_gain, l.ln2_bias});
    }
  }
  if (!model.tied) vars.push_back(model.head_w);
  vars.push_back(model.head_b);
  if (vars.size() != named.size()) throw ContractError("internal: parameter binding order mismatch");
  for (const Var& v : vars) out.grads.push_back(tape.grad(v));
  return out;
}

double batch_loss(const ModelParams& params, std::span<const TokenSeq> batch, const ObjectiveOptions& opts,
                  std::mt19937_64* rng) {
  Tape tape(false);
  const detail::BoundModel model = detail::bind(tape, params);
  return record_batch_loss(model, batch, opts, rng).value().item();
}

}  // namespace slm
