#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "doctest.h"
#include "slm/errors.hpp"
#include "slm/rerank.hpp"

using namespace slm;

namespace {

NBestList two_groups() {
  NBestList nb;
  nb.groups.push_back({"s0", {{"a b c", -1.0}, {"a b d", -2.0}}, "a b d"});
  nb.groups.push_back({"s1", {{"x y", -0.5}, {"x z", -0.7}, {"x y z", -3.0}}, "x y z"});
  return nb;
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// Minimum over every monotone alignment path, explored without memoization.
std::size_t enumerate_edits(const std::vector<std::string>& r, const std::vector<std::string>& h, std::size_t i,
                            std::size_t j) {
  if (i == r.size()) return h.size() - j;
  if (j == h.size()) return r.size() - i;
  const std::size_t diag = enumerate_edits(r, h, i + 1, j + 1) + (r[i] == h[j] ? 0 : 1);
  const std::size_t del = enumerate_edits(r, h, i + 1, j) + 1;
  const std::size_t ins = enumerate_edits(r, h, i, j + 1) + 1;
  return std::min({diag, del, ins});
}

std::string random_sentence(std::mt19937_64& rng, std::size_t max_words) {
  static const char* vocab[] = {"a", "b", "c", "d"};
  const std::size_t n = rng() % (max_words + 1);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + std::string(vocab[rng() % 4]);
  return s;
}

NBestList random_nbest(std::mt19937_64& rng, std::size_t groups) {
  NBestList nb;
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::size_t g = 0; g < groups; ++g) {
    NBestGroup grp;
    grp.source_id = "g" + std::to_string(g);
    std::string ref;
    while (ref.empty()) ref = random_sentence(rng, 6);
    grp.reference = ref;
    const std::size_t k = 1 + rng() % 4;
    for (std::size_t c = 0; c < k; ++c) grp.candidates.push_back({random_sentence(rng, 6), z(rng)});
    nb.groups.push_back(grp);
  }
  return nb;
}

LmScores random_lm(const NBestList& nb, std::mt19937_64& rng) {
  std::normal_distribution<double> z(-5.0, 2.0);
  LmScores lm;
  for (const auto& g : nb.groups) {
    lm.emplace_back();
    for (std::size_t c = 0; c < g.candidates.size(); ++c) lm.back().push_back(z(rng));
  }
  return lm;
}

}  // namespace

TEST_CASE("rerank examples") {
  NBestList nb;
  nb.groups.push_back({"s", {{"one", -1.0}, {"two", -2.0}}, "two"});
  const LmScores lm{{-5.0, -1.0}};
  CHECK(rerank(nb, lm, 0.0) == std::vector<std::size_t>{0});
  CHECK(rerank(nb, lm, 1e9) == std::vector<std::size_t>{1});
  CHECK(rerank(nb, lm, 0.5) == std::vector<std::size_t>{1});

  NBestList tie;
  tie.groups.push_back({"t", {{"p", -1.0}, {"q", -1.0}}, "p"});
  CHECK(rerank(tie, {{0.0, 0.0}}, 1.0) == std::vector<std::size_t>{0});

  CHECK_THROWS_AS(rerank(nb, {{-1.0}}, 0.5), ContractError);
  CHECK_THROWS_AS(rerank(nb, {}, 0.5), ContractError);
}

TEST_CASE("rerank argmax invariances") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0), pos(0.1, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    NBestList nb = random_nbest(rng, 5);
    const LmScores lm = random_lm(nb, rng);
    const double lambda = pos(rng);
    const auto base = rerank(nb, lm, lambda);

    NBestList shifted = nb;
    for (auto& g : shifted.groups) {
      const double c = u(rng);
      for (auto& cand : g.candidates) cand.base_score += c;
    }
    CHECK(rerank(shifted, lm, lambda) == base);

    const double s = pos(rng);
    NBestList scaled = nb;
    LmScores lm_scaled = lm;
    for (std::size_t g = 0; g < scaled.groups.size(); ++g) {
      for (std::size_t c = 0; c < scaled.groups[g].candidates.size(); ++c) {
        scaled.groups[g].candidates[c].base_score *= s;
        lm_scaled[g][c] *= s;
      }
    }
    CHECK(rerank(scaled, lm_scaled, lambda) == base);
  }
}

TEST_CASE("lambda grid") {
  const auto pts = LambdaGrid{0.0, 2.0, 0.05}.points();
  CHECK(pts.size() == 41);
  CHECK(pts.front() == 0.0);
  CHECK(pts.back() == doctest::Approx(2.0));
  const LambdaGrid g = LambdaGrid::parse("0:5:0.5");
  CHECK(g.hi == 5.0);
  CHECK(g.points().size() == 11);
  CHECK_THROWS_AS(LambdaGrid::parse("1:0:0.1"), ContractError);
  CHECK_THROWS_AS(LambdaGrid::parse("0:1:0"), ContractError);
  CHECK_THROWS_AS(LambdaGrid::parse("0:1"), ContractError);
}

TEST_CASE("tune_lambda never degrades the lambda=0 dev metric") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const NBestList nb = random_nbest(rng, 6);
    const LmScores lm = random_lm(nb, rng);
    for (Metric m : {Metric::Bleu, Metric::Wer}) {
      const TuneResult r = tune_lambda(nb, lm, {0.0, 2.0, 0.25}, m);
      CHECK(r.baseline_metric == evaluate_selection(nb, rerank(nb, lm, 0.0), m));
      if (m == Metric::Bleu) CHECK(r.metric >= r.baseline_metric);
      else CHECK(r.metric <= r.baseline_metric);
      // Ties resolve to the smallest lambda.
      for (const auto& [lam, val] : r.curve) {
        if (lam < r.lambda) CHECK(metric_better(m, r.metric, val));
      }
    }
  }
}

TEST_CASE("tune_lambda: single-candidate groups return lo") {
  NBestList nb;
  nb.groups.push_back({"a", {{"x y", -1.0}}, "x y"});
  nb.groups.push_back({"b", {{"z", -1.0}}, "z w"});
  const TuneResult r = tune_lambda(nb, {{-3.0}, {-4.0}}, {0.5, 2.0, 0.5}, Metric::Bleu);
  CHECK(r.lambda == 0.5);
  for (const auto& [lam, val] : r.curve) CHECK(val == r.metric);
}

TEST_CASE("tune_lambda: an LM that prefers references improves dev BLEU") {
  NBestList nb = two_groups();
  const LmScores lm{{-9.0, -1.0}, {-8.0, -7.0, -1.0}};
  const TuneResult r = tune_lambda(nb, lm, {0.0, 2.0, 0.05}, Metric::Bleu);
  CHECK(r.lambda > 0.0);
  CHECK(r.metric > r.baseline_metric);
  CHECK(r.metric == 100.0);
}

TEST_CASE("bleu examples") {
  CHECK(bleu({"the cat sat on the mat"}, {"the cat sat on the mat"}) == 100.0);
  CHECK(bleu({"a b c"}, {"x y z"}) == 0.0);
  const double hand = 100.0 * std::exp(1.0 - 4.0 / 3.0);
  CHECK(std::abs(bleu({"the cat sat down"}, {"the cat sat"}) - hand) < 1e-9);
  CHECK(std::abs(hand - 71.653) < 1e-3);
  CHECK_THROWS_AS(bleu({"a"}, {"a", "b"}), ContractError);
  CHECK_THROWS_AS(bleu({}, {}), ContractError);
}

TEST_CASE("bleu: hand-computed corpus value with partial matches") {
  // ref "a b c d e", hyp "a b x d e": 1-grams 4/5, 2-grams 2/4, 3-grams 0/3 -> 1/4,
  // 4-grams 0/2 -> 1/3; equal lengths so no brevity penalty.
  const double hand = 100.0 * std::exp((std::log(4.0 / 5) + std::log(2.0 / 4) + std::log(1.0 / 4) + std::log(1.0 / 3)) / 4);
  CHECK(std::abs(bleu({"a b c d e"}, {"a b x d e"}) - hand) < 1e-9);
}

TEST_CASE("bleu and wer stay in range") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> refs, hyps;
    for (int i = 0; i < 3; ++i) {
      std::string r;
      while (r.empty()) r = random_sentence(rng, 5);
      refs.push_back(r);
      hyps.push_back(random_sentence(rng, 5));
    }
    const double b = bleu(refs, hyps);
    CHECK(b >= 0.0);
    CHECK(b <= 100.0);
    CHECK(b == bleu(refs, hyps));
    CHECK(wer(refs, hyps) >= 0.0);
  }
}

TEST_CASE("wer examples") {
  CHECK(wer({"a b c"}, {"a b c"}) == 0.0);
  CHECK(wer({"a b c"}, {"a x c"}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(wer({"a b"}, {"b"}) == 0.5);
  CHECK(wer({"a b", "c"}, {"a", "c d"}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(wer({""}, {"a"}), ContractError);
}

TEST_CASE("edit distance matches exhaustive alignment enumeration") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto r = words(random_sentence(rng, 5));
    const auto h = words(random_sentence(rng, 5));
    CHECK(word_edit_distance(r, h) == enumerate_edits(r, h, 0, 0));
  }
}

TEST_CASE("oracle examples") {
  NBestList nb = two_groups();
  CHECK(oracle(nb, Metric::Bleu) == 100.0);
  CHECK(oracle(nb, Metric::Wer) == 0.0);

  NBestList single;
  single.groups.push_back({"a", {{"x y", -1.0}}, "x y z"});
  single.groups.push_back({"b", {{"p", -1.0}}, "p q"});
  const std::vector<std::size_t> zero{0, 0};
  CHECK(oracle(single, Metric::Wer) == evaluate_selection(single, zero, Metric::Wer));
  CHECK(oracle(single, Metric::Bleu) == evaluate_selection(single, zero, Metric::Bleu));
}

namespace {

double enumerate_best(const NBestList& nb, Metric m) {
  double best = m == Metric::Bleu ? -1.0 : 1e9;
  for (std::size_t i = 0; i < nb.groups[0].candidates.size(); ++i) {
    for (std::size_t j = 0; j < nb.groups[1].candidates.size(); ++j) {
      const double v = evaluate_selection(nb, {i, j}, m);
      if (metric_better(m, v, best)) best = v;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("oracle matches exhaustive enumeration on 2-group fixtures") {
  NBestList mixed;
  mixed.groups.push_back({"a", {{"a b c", 0}, {"a c", 0}, {"a b c d e", 0}}, "a b c d"});
  mixed.groups.push_back({"b", {{"x", 0}, {"x y z w", 0}, {"y z", 0}}, "x y z"});
  CHECK(oracle(mixed, Metric::Wer) == enumerate_best(mixed, Metric::Wer));
  // Per-sentence BLEU selection cannot beat the corpus-level optimum.
  CHECK(oracle(mixed, Metric::Bleu) <= enumerate_best(mixed, Metric::Bleu));

  NBestList dominant;
  dominant.groups.push_back({"a", {{"p q", 0}, {"p q r s", 0}, {"z", 0}}, "p q r s t"});
  dominant.groups.push_back({"b", {{"u v w x", 0}, {"u", 0}}, "u v w x y"});
  CHECK(oracle(dominant, Metric::Bleu) == doctest::Approx(enumerate_best(dominant, Metric::Bleu)).epsilon(1e-12));
  CHECK(oracle(dominant, Metric::Wer) == enumerate_best(dominant, Metric::Wer));
}

TEST_CASE("oracle WER bounds every reranking") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const NBestList nb = random_nbest(rng, 5);
    const LmScores lm = random_lm(nb, rng);
    const double o = oracle(nb, Metric::Wer);
    for (double lambda : LambdaGrid{0.0, 5.0, 0.5}.points()) {
      CHECK(o <= evaluate_selection(nb, rerank(nb, lm, lambda), Metric::Wer));
    }
  }
}

TEST_CASE("n-best parsing and splitting") {
  const std::string tsv = "s1\t1\t-2.0\tb c\ns0\t0\t-1.0\ta b\ns1\t0\t-1.5\tb\ns0\t1\t-3.0\ta\n";
  const NBestList nb = parse_nbest(tsv, {"b c", "a b"});
  REQUIRE(nb.groups.size() == 2);
  CHECK(nb.groups[0].source_id == "s1");
  CHECK(nb.groups[0].candidates[0].text == "b");
  CHECK(nb.groups[0].candidates[1].base_score == -2.0);
  CHECK(nb.groups[1].reference == "a b");
  CHECK(nb.candidate_count() == 4);
  CHECK_THROWS_AS(parse_nbest(tsv, {"only one"}), ContractError);
  CHECK_THROWS_AS(parse_nbest("s\t0\tnan\tx\n", {"x"}), ContractError);
  CHECK_THROWS_AS(parse_nbest("s\t0\n", {"x"}), ContractError);

  const auto [dev, test] = split_nbest(nb, 0.5);
  CHECK(dev.groups.size() == 1);
  CHECK(test.groups.size() == 1);
  CHECK(test.groups[0].source_id == "s0");
}

TEST_CASE("metric names") {
  CHECK(parse_metric("bleu") == Metric::Bleu);
  CHECK(parse_metric("wer") == Metric::Wer);
  CHECK(to_string(Metric::Wer) == "wer");
  CHECK_THROWS_AS(parse_metric("ter"), ContractError);
}
