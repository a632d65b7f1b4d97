#include "slm/baselines.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <random>

#include "slm/encoder.hpp"
#include "slm/errors.hpp"

namespace slm {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

void require_kind(const ModelParams& params, ModelKind kind, const char* what) {
  if (params.kind != kind) {
    throw ContractError(std::string(what) + " needs a " + to_string(kind) + " model, got " + to_string(params.kind));
  }
}

void fill_from_logits(SentenceScore& s, const Tensor& logits, std::size_t row, int target) {
  const auto lp = log_softmax_row(logits.row(row));
  s.per_token.push_back(lp[static_cast<std::size_t>(target)]);
  s.predicted.push_back(static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin()));
  s.total += s.per_token.back();
  s.log_probs.push_back(lp);
}

}  // namespace

MlmPartition make_mlm_partition(const TokenSeq& seq, std::size_t k, std::uint64_t seed) {
  const std::size_t m = seq.real_count();
  if (k < 1 || k > m) {
    throw ContractError("mlm: k=" + std::to_string(k) + " must lie in [1, " + std::to_string(m) + "]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), seq.real_begin());
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  MlmPartition p{k, seed, {}};
  for (std::size_t start = 0; start < m; start += k) {
    std::vector<std::size_t> subset(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(std::min(m, start + k)));
    std::sort(subset.begin(), subset.end());
    p.subsets.push_back(std::move(subset));
  }
  return p;
}

std::size_t MlmK::resolve(std::size_t real_tokens) const {
  if (divisor == 0) return count;
  return std::max<std::size_t>(1, ceil_div(real_tokens, divisor));
}

MlmK MlmK::parse(const std::string& text) {
  auto parse_num = [&](std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v == 0) {
      throw ContractError("invalid k '" + text + "' (expected a positive integer or n/D)");
    }
    return v;
  };
  if (text.rfind("n/", 0) == 0) return MlmK{0, parse_num(std::string_view(text).substr(2))};
  return MlmK{parse_num(text), 0};
}

std::string MlmK::str() const { return divisor ? "n/" + std::to_string(divisor) : std::to_string(count); }

SentenceScore clm_score(const ModelParams& params, const TokenSeq& seq) {
  require_kind(params, ModelKind::Clm, "clm_score");
  detail::check_length(params, seq.n());
  Tape tape(false);
  const detail::BoundModel model = detail::bind(tape, params);
  const Var h = detail::run_single_stream(model, model.encoders[0], seq.tokens(), causal_mask(seq.n()), {});
  detail::count_forward_pass();
  const Tensor logits = detail::output_head(model, h).value();

  SentenceScore s;
  s.passes = 1;
  for (std::size_t i = seq.real_begin(); i < seq.real_end(); ++i) fill_from_logits(s, logits, i - 1, seq[i]);
  const auto lp = log_softmax_row(logits.row(seq.n() - 2));
  s.eos_logprob = lp[kEos];
  s.total += s.eos_logprob;
  return s;
}

SentenceScore mlm_score(const ModelParams& params, const TokenSeq& seq, std::size_t k, std::uint64_t seed) {
  require_kind(params, ModelKind::Mlm, "mlm_score");
  detail::check_length(params, seq.n());
  const MlmPartition partition = make_mlm_partition(seq, k, seed);

  std::vector<double> per_token(seq.n(), 0.0);
  std::vector<int> predicted(seq.n(), 0);
  std::vector<std::vector<double>> rows(seq.n());
  const BoolMatrix mask = full_mask(seq.n());
  for (const auto& subset : partition.subsets) {
    std::vector<int> input = seq.tokens();
    for (std::size_t pos : subset) input[pos] = kMask;
    Tape tape(false);
    const detail::BoundModel model = detail::bind(tape, params);
    const Var h = detail::run_single_stream(model, model.encoders[0], input, mask, {});
    detail::count_forward_pass();
    const Var logits = detail::output_head(model, ops::select_rows(h, subset));
    for (std::size_t r = 0; r < subset.size(); ++r) {
      const auto lp = log_softmax_row(logits.value().row(r));
      per_token[subset[r]] = lp[static_cast<std::size_t>(seq[subset[r]])];
      predicted[subset[r]] = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
      rows[subset[r]] = lp;
    }
  }

  SentenceScore s;
  s.passes = partition.subsets.size();
  for (std::size_t i = seq.real_begin(); i < seq.real_end(); ++i) {
    s.per_token.push_back(per_token[i]);
    s.predicted.push_back(predicted[i]);
    s.log_probs.push_back(std::move(rows[i]));
    s.total += per_token[i];
  }
  return s;
}

SentenceScore bilm_score(const ModelParams& params, const TokenSeq& seq) {
  require_kind(params, ModelKind::BiLm, "bilm_score");
  detail::check_length(params, seq.n());
  Tape tape(false);
  const detail::BoundModel model = detail::bind(tape, params);
  const std::size_t n = seq.n();
  const Var hf = detail::run_single_stream(model, model.encoders[0], seq.tokens(), causal_mask(n), {});
  const Var hb = detail::run_single_stream(model, model.encoders[1], seq.tokens(), anticausal_mask(n), {});
  detail::count_forward_pass();

  std::vector<std::size_t> left, right;
  for (std::size_t i = seq.real_begin(); i < seq.real_end(); ++i) {
    left.push_back(i - 1);
    right.push_back(i + 1);
  }
  const std::vector<Var> parts{ops::select_rows(hf, left), ops::select_rows(hb, right)};
  const Tensor logits = detail::output_head(model, ops::concat_cols(parts)).value();

  SentenceScore s;
  s.passes = 1;
  for (std::size_t r = 0; r < left.size(); ++r) fill_from_logits(s, logits, r, seq[r + 1]);
  return s;
}

PassCost pass_cost(ModelKind kind, std::size_t n, std::optional<std::size_t> k) {
  if (n < 1) throw ContractError("pass_cost: n must be at least 1");
  PassCost c{kind, n, 0, 1, 1};
  switch (kind) {
    case ModelKind::Clm:
      break;
    case ModelKind::Mlm:
      if (!k || *k < 1) throw ContractError("pass_cost: MLM needs k >= 1");
      c.k = *k;
      c.passes = ceil_div(n, *k);
      c.relative_compute = c.passes;
      break;
    case ModelKind::BiLm:
      c.relative_compute = 2;
      break;
    case ModelKind::Slm:
      c.relative_compute = 3;
      break;
  }
  return c;
}

Scorer make_scorer(const ModelParams& params, MlmK k, std::uint64_t seed) {
  const ModelParams* p = &params;
  switch (params.kind) {
    case ModelKind::Slm: return [p](const TokenSeq& s) { return score_sentence(*p, s); };
    case ModelKind::Clm: return [p](const TokenSeq& s) { return clm_score(*p, s); };
    case ModelKind::BiLm: return [p](const TokenSeq& s) { return bilm_score(*p, s); };
    case ModelKind::Mlm:
      return [p, k, seed](const TokenSeq& s) {
        if (s.real_count() == 0) detail::check_length(*p, s.n());
        return mlm_score(*p, s, std::min(k.resolve(s.real_count()), s.real_count()), seed);
      };
  }
  throw ContractError("unknown model kind");
}

}  // namespace slm
