#include <cmath>

#include "doctest.h"
#include "slm/analysis.hpp"
#include "slm/errors.hpp"

using namespace slm;

namespace {

ModelParams zero_head_model(std::size_t vocab) {
  ModelConfig c;
  c.layers = 1;
  c.d_model = 8;
  c.heads = 2;
  c.d_ff = 16;
  c.vocab_size = vocab;
  c.max_len = 16;
  ModelParams p = init_model(c, 1);
  p.head_w.fill(0.0);
  p.head_b.fill(0.0);
  return p;
}

std::vector<TokenSeq> fixed_length_set() {
  return {TokenSeq(std::vector<int>{kBos, 5, 6, 7, kEos}), TokenSeq(std::vector<int>{kBos, 7, 7, 5, kEos}),
          TokenSeq(std::vector<int>{kBos, 6, 5, 6, kEos})};
}

// Scorer that always puts all mass on the true token.
SentenceScore oracle_score(const TokenSeq& seq) {
  SentenceScore s;
  s.passes = 1;
  for (int t : seq.real()) {
    s.per_token.push_back(0.0);
    s.predicted.push_back(t);
  }
  return s;
}

}  // namespace

TEST_CASE("zeroed head gives a flat ln V profile") {
  const ModelParams p = zero_head_model(8);
  const auto subset = fixed_length_set();
  const PositionProfile prof = position_profile(make_scorer(p), subset);
  CHECK(prof.n == 3);
  CHECK(prof.sample_count == 3);
  for (double ce : prof.per_position_ce) CHECK(std::abs(ce - std::log(8.0)) < 1e-12);
}

TEST_CASE("zeroed head accuracy under lowest-index tie-break") {
  // Every position predicts index 0 (PAD), which never occurs as a real token.
  const ModelParams p = zero_head_model(8);
  const auto subset = fixed_length_set();
  CHECK(token_accuracy(make_scorer(p), subset, 3) == 0.0);
}

TEST_CASE("perfect scorer has accuracy 1 and zero profile") {
  const auto subset = fixed_length_set();
  CHECK(token_accuracy(oracle_score, subset, 3) == 1.0);
  for (double ce : position_profile(oracle_score, subset).per_position_ce) CHECK(ce == 0.0);
}

TEST_CASE("mixed lengths are rejected") {
  auto subset = fixed_length_set();
  subset.push_back(TokenSeq(std::vector<int>{kBos, 5, kEos}));
  CHECK_THROWS_AS(position_profile(oracle_score, subset), ContractError);
  CHECK_THROWS_AS(token_accuracy(oracle_score, subset, 3), ContractError);
  CHECK_THROWS_AS(position_profile(oracle_score, {}), ContractError);
}

TEST_CASE("sentences_of_length filters by real length") {
  auto corpus = fixed_length_set();
  corpus.push_back(TokenSeq(std::vector<int>{kBos, 5, kEos}));
  CHECK(sentences_of_length(corpus, 3).size() == 3);
  CHECK(sentences_of_length(corpus, 1).size() == 1);
}

TEST_CASE("cost report rows") {
  const std::vector<std::size_t> ns{20}, ks{1, 2, 3};
  const auto rows = cost_report(ns, ks);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].kind == ModelKind::Clm);
  CHECK(rows[0].passes == 1);
  CHECK(rows[1].passes == 20);
  CHECK(rows[2].passes == 10);
  CHECK(rows[3].passes == 7);
  CHECK(rows[4].kind == ModelKind::BiLm);
  CHECK(rows[4].relative_compute == 2);
  CHECK(rows[5].kind == ModelKind::Slm);
  CHECK(rows[5].passes == 1);
  CHECK(rows[5].relative_compute == 3);
  const std::string table = cost_report_table(rows);
  CHECK(table.find("mlm") != std::string::npos);
}

TEST_CASE("profile output formats") {
  PositionProfile p{3, {0.5, 1.0, 0.0}, 4};
  const std::string csv = profile_csv(p);
  CHECK(csv.rfind("position,cross_entropy\n", 0) == 0);
  CHECK(csv.find("\n2,1") != std::string::npos);
  const std::string art = profile_ascii(p, 10);
  CHECK(art.find("##########") != std::string::npos);
}
