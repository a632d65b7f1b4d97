#include "slm/model.hpp"

#include <algorithm>
#include <cmath>

#include "slm/encoder.hpp"
#include "slm/errors.hpp"

namespace slm {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Slm: return "slm";
    case ModelKind::Clm: return "clm";
    case ModelKind::Mlm: return "mlm";
    case ModelKind::BiLm: return "bilm";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "slm") return ModelKind::Slm;
  if (name == "clm") return ModelKind::Clm;
  if (name == "mlm") return ModelKind::Mlm;
  if (name == "bilm") return ModelKind::BiLm;
  throw ContractError("unknown model kind '" + std::string(name) + "' (expected slm, clm, mlm or bilm)");
}

void ModelConfig::validate(ModelKind kind) const {
  if (layers == 0) throw ContractError("config: layers must be positive");
  if (heads == 0 || d_model % heads != 0) {
    throw ContractError("config: d_model " + std::to_string(d_model) + " is not divisible by heads " +
                        std::to_string(heads));
  }
  if (d_model < 2 || d_ff == 0) throw ContractError("config: d_model must be >= 2 and d_ff positive");
  if (vocab_size <= static_cast<std::size_t>(kNumReserved)) {
    throw ContractError("config: vocab_size must exceed the " + std::to_string(kNumReserved) + " reserved symbols");
  }
  if (max_len < kMinSequenceLength) throw ContractError("config: max_len must be at least 3");
  if (dropout < 0.0 || dropout >= 1.0) throw ContractError("config: dropout must be in [0, 1)");
  if (kind == ModelKind::BiLm) {
    if (d_model % 2 != 0 || (d_model / 2) % heads != 0 || d_model / 2 < 2) {
      throw ContractError("config: bilm needs d_model/2 divisible by heads");
    }
    if (tie_embeddings) throw ContractError("config: bilm does not support tied embeddings");
  }
}

ModelConfig ModelConfig::preset(std::string_view name, std::size_t vocab_size, std::size_t max_len) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  c.max_len = max_len;
  if (name == "base") {
    c.layers = 4;
    c.d_model = 96;
    c.heads = 6;
    c.d_ff = 384;
  } else if (name == "small") {
    c.layers = 2;
    c.d_model = 64;
    c.heads = 4;
    c.d_ff = 256;
  } else {
    throw ContractError("unknown preset '" + std::string(name) + "' (expected base or small)");
  }
  return c;
}

EncoderShape encoder_shape(const ModelConfig& cfg, ModelKind kind) {
  if (kind == ModelKind::BiLm) return {cfg.layers, cfg.d_model / 2, cfg.heads, std::max<std::size_t>(1, cfg.d_ff / 2)};
  return {cfg.layers, cfg.d_model, cfg.heads, cfg.d_ff};
}

namespace {

void append_layer(std::vector<NamedTensor>& out, const std::string& p, LayerParams& l) {
  out.push_back({p + "attn.wq", &l.wq});
  out.push_back({p + "attn.bq", &l.bq});
  out.push_back({p + "attn.wk", &l.wk});
  out.push_back({p + "attn.bk", &l.bk});
  out.push_back({p + "attn.wv", &l.wv});
  out.push_back({p + "attn.bv", &l.bv});
  out.push_back({p + "attn.wo", &l.wo});
  out.push_back({p + "attn.bo", &l.bo});
  out.push_back({p + "ln1.gain", &l.ln1_gain});
  out.push_back({p + "ln1.bias", &l.ln1_bias});
  out.push_back({p + "ffn.w1", &l.ff1_w});
  out.push_back({p + "ffn.b1", &l.ff1_b});
  out.push_back({p + "ffn.w2", &l.ff2_w});
  out.push_back({p + "ffn.b2", &l.ff2_b});
  out.push_back({p + "ln2.gain", &l.ln2_gain});
  out.push_back({p + "ln2.bias", &l.ln2_bias});
}

LayerParams make_layer(const EncoderShape& s, std::mt19937_64& rng) {
  const std::size_t d = s.d_model, f = s.d_ff;
  const double sd = 0.02;
  LayerParams l;
  l.wq = Tensor::normal({d, d}, sd, rng);
  l.bq = Tensor({d});
  l.wk = Tensor::normal({d, d}, sd, rng);
  l.bk = Tensor({d});
  l.wv = Tensor::normal({d, d}, sd, rng);
  l.bv = Tensor({d});
  l.wo = Tensor::normal({d, d}, sd, rng);
  l.bo = Tensor({d});
  l.ln1_gain = Tensor({d}, 1.0);
  l.ln1_bias = Tensor({d});
  l.ff1_w = Tensor::normal({d, f}, sd, rng);
  l.ff1_b = Tensor({f});
  l.ff2_w = Tensor::normal({f, d}, sd, rng);
  l.ff2_b = Tensor({d});
  l.ln2_gain = Tensor({d}, 1.0);
  l.ln2_bias = Tensor({d});
  return l;
}

thread_local std::size_t t_forward_passes = 0;

}  // namespace

std::vector<NamedTensor> ModelParams::named() {
  std::vector<NamedTensor> out;
  const bool two = encoders.size() == 2;
  for (std::size_t e = 0; e < encoders.size(); ++e) {
    const std::string prefix = two ? (e == 0 ? "fwd." : "bwd.") : "";
    EncoderParams& enc = encoders[e];
    out.push_back({prefix + "token_embed", &enc.token_embed});
    out.push_back({prefix + "pos_embed", &enc.pos_embed});
    for (std::size_t l = 0; l < enc.layers.size(); ++l) {
      append_layer(out, prefix + "layers." + std::to_string(l) + ".", enc.layers[l]);
    }
  }
  if (!config.tie_embeddings) out.push_back({"head.w", &head_w});
  out.push_back({"head.b", &head_b});
  return out;
}

std::vector<ConstNamedTensor> ModelParams::named() const {
  auto mut = const_cast<ModelParams*>(this)->named();
  std::vector<ConstNamedTensor> out;
  out.reserve(mut.size());
  for (auto& nt : mut) out.push_back({std::move(nt.name), nt.tensor});
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& nt : named()) total += nt.tensor->size();
  return total;
}

ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed, ModelKind kind) {
  cfg.validate(kind);
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.kind = kind;
  p.config = cfg;
  p.seed = seed;
  const EncoderShape s = encoder_shape(cfg, kind);
  const std::size_t stacks = kind == ModelKind::BiLm ? 2 : 1;
  for (std::size_t e = 0; e < stacks; ++e) {
    EncoderParams enc;
    enc.token_embed = Tensor::normal({cfg.vocab_size, s.d_model}, 0.02, rng);
    enc.pos_embed = Tensor::normal({cfg.max_len, s.d_model}, 0.02, rng);
    for (std::size_t l = 0; l < s.layers; ++l) enc.layers.push_back(make_layer(s, rng));
    p.encoders.push_back(std::move(enc));
  }
  if (!cfg.tie_embeddings) p.head_w = Tensor::normal({cfg.d_model, cfg.vocab_size}, 0.02, rng);
  p.head_b = Tensor({cfg.vocab_size});
  return p;
}

std::size_t forward_pass_count() { return t_forward_passes; }
void reset_forward_pass_count() { t_forward_passes = 0; }

namespace detail {

void count_forward_pass() { ++t_forward_passes; }

void check_length(const ModelParams& params, std::size_t n) {
  if (n > params.config.max_len) {
    throw LengthError("sequence of length " + std::to_string(n) + " exceeds max_len " +
                      std::to_string(params.config.max_len));
  }
  if (n < kMinSequenceLength) {
    throw ContractError("sentence has no real tokens; scoring needs at least one token between BOS and EOS");
  }
}

BoundModel bind(Tape& tape, const ModelParams& params) {
  BoundModel m;
  m.params = &params;
  m.shape = encoder_shape(params.config, params.kind);
  for (const EncoderParams& enc : params.encoders) {
    BoundEncoder be;
    be.token_embed = tape.param(enc.token_embed);
    be.pos_embed = tape.param(enc.pos_embed);
    for (const LayerParams& l : enc.layers) {
      be.layers.push_back(BoundLayer{
          tape.param(l.wq), tape.param(l.bq), tape.param(l.wk), tape.param(l.bk), tape.param(l.wv),
          tape.param(l.bv), tape.param(l.wo), tape.param(l.bo), tape.param(l.ln1_gain), tape.param(l.ln1_bias),
          tape.param(l.ff1_w), tape.param(l.ff1_b), tape.param(l.ff2_w), tape.param(l.ff2_b),
          tape.param(l.ln2_gain), tape.param(l.ln2_bias)});
    }
    m.encoders.push_back(std::move(be));
  }
  m.tied = params.config.tie_embeddings;
  m.head_w = m.tied ? m.encoders[0].token_embed : tape.param(params.head_w);
  m.head_b = tape.param(params.head_b);
  return m;
}

namespace {

Var project(Var x, Var w, Var b) { return ops::add_bias(ops::matmul(x, w), b); }

// Multi-head scaled dot-product attention over already-projected q/k/v.
Var attention_core(const EncoderShape& s, Var q, Var k, Var v, const BoolMatrix& allow, const DropoutCtx& drop) {
  const std::size_t dh = s.d_model / s.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(s.heads);
  for (std::size_t h = 0; h < s.heads; ++h) {
    Var qh = s.heads == 1 ? q : ops::slice_cols(q, h * dh, dh);
    Var kh = s.heads == 1 ? k : ops::slice_cols(k, h * dh, dh);
    Var vh = s.heads == 1 ? v : ops::slice_cols(v, h * dh, dh);
    Var weights = ops::masked_softmax(ops::scale(ops::matmul_nt(qh, kh), inv_sqrt), allow);
    if (drop.rng) weights = ops::dropout(weights, drop.p, *drop.rng);
    heads.push_back(ops::matmul(weights, vh));
  }
  return s.heads == 1 ? heads[0] : ops::concat_cols(heads);
}

// attention output -> residual -> norm -> FFN -> residual -> norm
Var finish_sublayers(const BoundLayer& l, Var x, Var attn, const DropoutCtx& drop) {
  Var h = ops::layer_norm(ops::add(x, project(attn, l.wo, l.bo)), l.ln1_gain, l.ln1_bias);
  Var inner = ops::gelu(project(h, l.ff1_w, l.ff1_b));
  if (drop.rng) inner = ops::dropout(inner, drop.p, *drop.rng);
  return ops::layer_norm(ops::add(h, project(inner, l.ff2_w, l.ff2_b)), l.ln2_gain, l.ln2_bias);
}

}  // namespace

Var token_inputs(const BoundEncoder& enc, std::span<const int> tokens) {
  return ops::add(ops::embedding(enc.token_embed, tokens), position_inputs(enc, tokens.size()));
}

Var position_inputs(const BoundEncoder& enc, std::size_t n) {
  std::vector<std::size_t> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[i] = i;
  return ops::select_rows(enc.pos_embed, pos);
}

TripleStreams run_triple_stream(const BoundModel& model, std::span<const int> tokens, const DropoutCtx& drop) {
  const BoundEncoder& enc = model.encoders.at(0);
  const EncoderShape& s = model.shape;
  const MaskSet masks = build_masks(tokens.size());

  TripleStreams st;
  st.fwd.push_back(token_inputs(enc, tokens));
  st.bwd.push_back(st.fwd.back());
  st.query.push_back(position_inputs(enc, tokens.size()));

  for (const BoundLayer& l : enc.layers) {
    Var hf = st.fwd.back(), hb = st.bwd.back(), q = st.query.back();
    // Keys and values of the content streams are shared with the query stream.
    Var kf = project(hf, l.wk, l.bk), vf = project(hf, l.wv, l.bv);
    Var kb = project(hb, l.wk, l.bk), vb = project(hb, l.wv, l.bv);
    Var af = attention_core(s, project(hf, l.wq, l.bq), kf, vf, masks.forward, drop);
    Var ab = attention_core(s, project(hb, l.wq, l.bq), kb, vb, masks.backward, drop);
    Var aq = attention_core(s, project(q, l.wq, l.bq), ops::concat_rows(kf, kb), ops::concat_rows(vf, vb),
                            masks.query, drop);
    st.fwd.push_back(finish_sublayers(l, hf, af, drop));
    st.bwd.push_back(finish_sublayers(l, hb, ab, drop));
    st.query.push_back(finish_sublayers(l, q, aq, drop));
  }
  return st;
}

Var run_single_stream(const BoundModel& model, const BoundEncoder& enc, std::span<const int> tokens,
                      const BoolMatrix& mask, const DropoutCtx& drop) {
  const EncoderShape& s = model.shape;
  Var h = token_inputs(enc, tokens);
  for (const BoundLayer& l : enc.layers) {
    Var a = attention_core(s, project(h, l.wq, l.bq), project(h, l.wk, l.bk), project(h, l.wv, l.bv), mask, drop);
    h = finish_sublayers(l, h, a, drop);
  }
  return h;
}

Var output_head(const BoundModel& model, Var states) {
  Var raw = model.tied ? ops::matmul_nt(states, model.head_w) : ops::matmul(states, model.head_w);
  return ops::add_bias(raw, model.head_b);
}

}  // namespace detail

namespace {

void require_kind(const ModelParams& params, ModelKind kind, const char* what) {
  if (params.kind != kind) {
    throw ContractError(std::string(what) + " needs a " + to_string(kind) + " model, got " + to_string(params.kind));
  }
}

}  // namespace

ForwardResult forward_pass(const ModelParams& params, const TokenSeq& seq) {
  require_kind(params, ModelKind::Slm, "forward_pass");
  detail::check_length(params, seq.n());
  Tape tape(false);
  const detail::BoundModel model = detail::bind(tape, params);
  const detail::TripleStreams st = detail::run_triple_stream(model, seq.tokens(), {});
  detail::count_forward_pass();

  ForwardResult out;
  out.logits = detail::output_head(model, st.query.back()).value();
  for (std::size_t l = 0; l < st.fwd.size(); ++l) {
    out.states.fwd.push_back(st.fwd[l].value());
    out.states.bwd.push_back(st.bwd[l].value());
    out.states.query.push_back(st.query[l].value());
  }
  return out;
}

SentenceScore score_sentence(const ModelParams& params, const TokenSeq& seq) {
  const ForwardResult fr = forward_pass(params, seq);
  SentenceScore s;
  s.passes = 1;
  for (std::size_t i = seq.real_begin(); i < seq.real_end(); ++i) {
    const auto lp = log_softmax_row(fr.logits.row(i));
    s.per_token.push_back(lp[static_cast<std::size_t>(seq[i])]);
    s.predicted.push_back(static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin()));
    s.total += s.per_token.back();
    s.log_probs.push_back(lp);
  }
  return s;
}

double slm_loss(const ModelParams& params, std::span<const TokenSeq> batch) {
  require_kind(params, ModelKind::Slm, "slm_loss");
  if (batch.empty()) throw ContractError("slm_loss: empty batch");
  double nll = 0.0;
  std::size_t count = 0;
  for (const TokenSeq& seq : batch) {
    const SentenceScore s = score_sentence(params, seq);
    nll -= s.total;
    count += s.per_token.size();
  }
  return nll / static_cast<double>(count);
}

}  // namespace slm
