#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "slm/errors.hpp"
#include "slm/model.hpp"
#include "slm/trainer.hpp"

using namespace slm;

namespace {

ModelConfig tiny(std::size_t vocab = 8, std::size_t d = 16) {
  ModelConfig c;
  c.layers = 2;
  c.d_model = d;
  c.heads = 2;
  c.d_ff = 2 * d;
  c.vocab_size = vocab;
  c.max_len = 16;
  c.dropout = 0.0;
  return c;
}

TokenSeq random_seq(std::size_t real, std::size_t vocab, std::mt19937_64& rng) {
  std::vector<int> t(real);
  for (int& v : t) v = kNumReserved + static_cast<int>(rng() % (vocab - kNumReserved));
  return TokenSeq::from_real(t);
}

// Independent count of the declared layout.
std::size_t closed_form_count(std::size_t L, std::size_t d, std::size_t dff, std::size_t V, std::size_t max_len) {
  const std::size_t attention = 4 * (d * d + d);
  const std::size_t norms = 2 * (2 * d);
  const std::size_t ffn = d * dff + dff + dff * d + d;
  return V * d + max_len * d + L * (attention + norms + ffn) + d * V + V;
}

void zero_head(ModelParams& p) {
  p.head_w.fill(0.0);
  p.head_b.fill(0.0);
}

// Reverses the sequence direction: position p reads the embedding of n-1-p,
// and BOS/EOS swap roles.
ModelParams mirror_model(const ModelParams& p, std::size_t n) {
  ModelParams m = p;
  EncoderParams& e = m.encoders[0];
  const std::size_t d = e.pos_embed.cols();
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t c = 0; c < d; ++c) e.pos_embed.at(pos, c) = p.encoders[0].pos_embed.at(n - 1 - pos, c);
  }
  for (std::size_t c = 0; c < d; ++c) std::swap(e.token_embed.at(kBos, c), e.token_embed.at(kEos, c));
  return m;
}

}  // namespace

TEST_CASE("init is deterministic per seed") {
  const ModelParams a = init_model(tiny(), 3);
  const ModelParams b = init_model(tiny(), 3);
  const ModelParams c = init_model(tiny(), 4);
  const auto na = a.named();
  const auto nb = b.named();
  const auto nc = c.named();
  REQUIRE(na.size() == nb.size());
  bool differs = false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    CHECK(na[i].name == nb[i].name);
    CHECK(*na[i].tensor == *nb[i].tensor);
    differs = differs || !(*na[i].tensor == *nc[i].tensor);
  }
  CHECK(differs);
}

TEST_CASE("parameter count matches the closed-form layout count") {
  ModelConfig c;
  c.layers = 2;
  c.d_model = 16;
  c.heads = 2;
  c.d_ff = 32;
  c.vocab_size = 32;
  c.max_len = 32;
  const ModelParams p = init_model(c, 1);
  CHECK(p.parameter_count() == closed_form_count(2, 16, 32, 32, 32));
  CHECK(p.parameter_count() == 6016);

  c.tie_embeddings = true;
  CHECK(init_model(c, 1).parameter_count() == 6016 - 16 * 32);
}

TEST_CASE("layer-norm gains start at one and biases at zero") {
  const ModelParams p = init_model(tiny(), 9);
  for (const auto& [name, t] : p.named()) {
    if (name.find(".gain") != std::string::npos) {
      for (double v : t->data()) CHECK(v == 1.0);
    }
    if (name.ends_with(".b") || name.find(".b1") != std::string::npos || name.find(".bias") != std::string::npos) {
      for (double v : t->data()) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("config validation") {
  ModelConfig c = tiny();
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = tiny();
  c.vocab_size = 3;
  CHECK_THROWS(c.validate());
  CHECK_NOTHROW(ModelConfig::preset("base", 50, 32).validate());
  CHECK_NOTHROW(ModelConfig::preset("small", 50, 32).validate(ModelKind::BiLm));
}

TEST_CASE("logits row i is invariant to token i, exhaustively for V=8, n=5") {
  const ModelParams p = init_model(tiny(8), 17);
  const int first = kNumReserved, last = 7;
  for (int a = first; a <= last; ++a) {
    for (int b = first; b <= last; ++b) {
      for (int c = first; c <= last; ++c) {
        const TokenSeq seq(std::vector<int>{kBos, a, b, c, kEos});
        const Tensor base = forward_pass(p, seq).logits;
        for (std::size_t i = 1; i <= 3; ++i) {
          for (int v = 0; v < 8; ++v) {
            if (v == seq[i]) continue;
            const Tensor other = forward_pass(p, seq.with(i, v)).logits;
            const auto r0 = base.row(i);
            const auto r1 = other.row(i);
            CHECK(std::equal(r0.begin(), r0.end(), r1.begin()));
          }
        }
      }
    }
  }
}

TEST_CASE("content streams see only their own side") {
  std::mt19937_64 rng(2);
  const ModelParams p = init_model(tiny(12), 5);
  const TokenSeq seq = random_seq(5, 12, rng);
  const StreamStates base = forward_pass(p, seq).states;
  const std::size_t n = seq.n();
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const int v = seq[j] == 6 ? 7 : 6;
    const StreamStates pert = forward_pass(p, seq.with(j, v)).states;
    for (std::size_t l = 0; l < base.fwd.size(); ++l) {
      for (std::size_t i = 0; i < n; ++i) {
        auto same = [&](const Tensor& x, const Tensor& y) {
          return std::equal(x.row(i).begin(), x.row(i).end(), y.row(i).begin());
        };
        if (j > i) CHECK(same(base.fwd[l], pert.fwd[l]));
        if (j < i) CHECK(same(base.bwd[l], pert.bwd[l]));
        if (j == i) CHECK(same(base.query[l], pert.query[l]));
      }
    }
  }
}

TEST_CASE("per_token[i] depends on every j != i") {
  std::mt19937_64 rng(8);
  const ModelParams p = init_model(tiny(12), 6);
  const TokenSeq seq = random_seq(6, 12, rng);
  const SentenceScore base = score_sentence(p, seq);
  for (std::size_t i = 0; i < seq.real_count(); ++i) {
    for (std::size_t j = 1; j + 1 < seq.n(); ++j) {
      if (j == i + 1) continue;
      bool changed = false;
      for (int v = kNumReserved; v < 12 && !changed; ++v) {
        if (v != seq[j]) changed = score_sentence(p, seq.with(j, v)).per_token[i] != base.per_token[i];
      }
      CHECK(changed);
    }
  }
}

TEST_CASE("zeroed head gives uniform distributions") {
  ModelParams p = init_model(tiny(8), 1);
  zero_head(p);
  const TokenSeq seq(std::vector<int>{kBos, 5, 6, 7, 5, kEos});
  const SentenceScore s = score_sentence(p, seq);
  REQUIRE(s.per_token.size() == 4);
  for (double lp : s.per_token) CHECK(lp == -std::log(8.0));
  CHECK(s.total == 4 * -std::log(8.0));
  const std::vector<TokenSeq> batch{seq, seq.with(2, 7)};
  CHECK(std::abs(slm_loss(p, batch) - std::log(8.0)) < 1e-15);
}

TEST_CASE("scoring is a single forward pass and totals are exact sums") {
  std::mt19937_64 rng(4);
  const ModelParams p = init_model(tiny(10), 2);
  for (int trial = 0; trial < 5; ++trial) {
    const TokenSeq seq = random_seq(1 + rng() % 10, 10, rng);
    reset_forward_pass_count();
    const SentenceScore s = score_sentence(p, seq);
    CHECK(forward_pass_count() == 1);
    CHECK(s.passes == 1);
    double sum = 0.0;
    for (double v : s.per_token) sum += v;
    CHECK(s.total == sum);
  }
}

TEST_CASE("mirror-constructed model scores the reversed sentence identically") {
  std::mt19937_64 rng(12);
  const ModelParams p = init_model(tiny(16), 21);
  for (int trial = 0; trial < 4; ++trial) {
    const TokenSeq seq = random_seq(2 + rng() % 8, 16, rng);
    std::vector<int> rev(seq.real().begin(), seq.real().end());
    std::reverse(rev.begin(), rev.end());
    const SentenceScore a = score_sentence(p, seq);
    const SentenceScore b = score_sentence(mirror_model(p, seq.n()), TokenSeq::from_real(rev));
    const std::size_t m = a.per_token.size();
    for (std::size_t r = 0; r < m; ++r) CHECK(std::abs(b.per_token[r] - a.per_token[m - 1 - r]) < 1e-9);
    CHECK(std::abs(a.total - b.total) < 1e-9);
  }
}

TEST_CASE("length and contract errors") {
  const ModelParams p = init_model(tiny(8), 1);
  std::vector<int> long_seq(20, 5);
  CHECK_THROWS_AS(score_sentence(p, TokenSeq::from_real(long_seq)), LengthError);
  CHECK_THROWS_AS(score_sentence(p, TokenSeq()), ContractError);
  CHECK_THROWS_AS(slm_loss(p, {}), ContractError);
}

TEST_CASE("memorizing one repeated sentence") {
  ModelConfig c = tiny(12, 16);
  TrainConfig t;
  t.lr_peak = 3e-3;
  t.warmup_steps = 10;
  t.total_steps = 200;
  t.batch_tokens = 64;
  t.log_interval = 1;
  const TokenSeq seq(std::vector<int>{kBos, 5, 9, 6, 11, 7, 8, kEos});
  const std::vector<TokenSeq> corpus(4, seq);
  const TrainResult r = train(ModelKind::Slm, c, t, corpus);
  REQUIRE(r.curve.size() == 200);
  std::size_t non_increasing = 0;
  for (std::size_t s = 1; s < r.curve.size(); ++s) non_increasing += r.curve[s].loss <= r.curve[s - 1].loss;
  MESSAGE("non-increasing steps: " << non_increasing << "/199, final " << r.curve.back().loss);
  CHECK(static_cast<double>(non_increasing) >= 0.95 * 199.0);
  CHECK(r.curve.back().loss < 0.1);
}
