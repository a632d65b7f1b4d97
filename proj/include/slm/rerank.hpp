#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace slm {

struct Candidate {
  std::string text;
  double base_score = 0.0;  // log-probability scale
};

struct NBestGroup {
  std::string source_id;
  std::vector<Candidate> candidates;
  std::string reference;
};

struct NBestList {
  std::vector<NBestGroup> groups;

  void validate() const;
  std::size_t candidate_count() const;
};

// Parallel to NBestList: lm_scores[g][c] is the LM total for candidate c of
// group g.
using LmScores = std::vector<std::vector<double>>;

// TSV rows `source_id \t candidate_rank \t base_score \t text`. Groups keep
// the order in which their source_id first appears; candidates are sorted by
// rank. refs holds one reference per group in that same order.
NBestList parse_nbest(std::string_view tsv, const std::vector<std::string>& refs);
NBestList read_nbest(const std::string& nbest_path, const std::string& refs_path);

// Applies `score` to every candidate text, group by group.
LmScores score_candidates(const NBestList& nbest, const std::function<double(const std::string&)>& score);

// Splits groups into [0, cut) and [cut, size) with cut = round(fraction * size).
std::pair<NBestList, NBestList> split_nbest(const NBestList& nbest, double fraction);

// Per group: argmax of base_score + lambda * lm_score, lowest index on ties.
std::vector<std::size_t> rerank(const NBestList& nbest, const LmScores& lm_scores, double lambda);

struct LambdaGrid {
  double lo = 0.0;
  double hi = 2.0;
  double step = 0.05;

  void validate() const;
  std::vector<double> points() const;
  // "lo:hi:step"
  static LambdaGrid parse(const std::string& text);
};

enum class Metric { Bleu, Wer };

Metric parse_metric(std::string_view name);
std::string to_string(Metric m);
// BLEU: higher is better. WER: lower is better.
bool metric_better(Metric m, double a, double b);

struct TuneResult {
  double lambda = 0.0;
  double metric = 0.0;
  double baseline_metric = 0.0;  // lambda = 0
  std::vector<std::pair<double, double>> curve;
};

// Exhaustive grid search; ties resolve to the smallest lambda.
TuneResult tune_lambda(const NBestList& dev, const LmScores& lm_scores, const LambdaGrid& grid, Metric metric);

std::vector<std::string> selected_texts(const NBestList& nbest, const std::vector<std::size_t>& selection);
std::vector<std::string> references(const NBestList& nbest);
double evaluate_selection(const NBestList& nbest, const std::vector<std::size_t>& selection, Metric metric);

// Corpus BLEU-4 in [0, 100] over whitespace tokens, with brevity penalty.
// Orders 2-4 with zero clipped matches use (0 + 1) / (total + 1); zero
// unigram matches give 0.
double bleu(const std::vector<std::string>& refs, const std::vector<std::string>& hyps);
double sentence_bleu(const std::string& ref, const std::string& hyp);

// Word-level Levenshtein distance.
std::size_t word_edit_distance(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

// Total word edits / total reference words.
double wer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps);

// Picks each group's sentence-level best candidate (smoothed sentence BLEU,
// or fewest word edits) and scores the selection at corpus level.
std::vector<std::size_t> oracle_selection(const NBestList& nbest, Metric metric);
double oracle(const NBestList& nbest, Metric metric);

}  // namespace slm
