#include "slm/rerank.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "slm/errors.hpp"
#include "slm/vocab.hpp"

namespace slm {

namespace {

std::vector<std::string> words(const std::string& s) { return split_tokens(s, false); }

struct BleuStats {
  std::size_t matches[4] = {0, 0, 0, 0};
  std::size_t totals[4] = {0, 0, 0, 0};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;

  void add(const std::string& ref, const std::string& hyp) {
    const auto r = words(ref);
    const auto h = words(hyp);
    hyp_len += h.size();
    ref_len += r.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      std::map<std::vector<std::string>, std::size_t> ref_counts;
      for (std::size_t i = 0; i + n <= r.size(); ++i) ++ref_counts[{r.begin() + i, r.begin() + i + n}];
      std::map<std::vector<std::string>, std::size_t> hyp_counts;
      for (std::size_t i = 0; i + n <= h.size(); ++i) ++hyp_counts[{h.begin() + i, h.begin() + i + n}];
      for (const auto& [gram, count] : hyp_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matches[n - 1] += std::min(count, it->second);
        totals[n - 1] += count;
      }
    }
  }

  double score() const {
    if (hyp_len == 0 || matches[0] == 0) return 0.0;
    double log_sum = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
      const double p = matches[n] > 0 ? static_cast<double>(matches[n]) / static_cast<double>(totals[n])
                                      : 1.0 / static_cast<double>(totals[n] + 1);
      log_sum += std::log(p);
    }
    const double bp =
        hyp_len > ref_len ? 1.0 : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    return 100.0 * bp * std::exp(log_sum / 4.0);
  }
};

void check_aligned(const NBestList& nbest, const LmScores& lm) {
  if (lm.size() != nbest.groups.size()) {
    throw ContractError("lm scores cover " + std::to_string(lm.size()) + " groups, n-best has " +
                        std::to_string(nbest.groups.size()));
  }
  for (std::size_t g = 0; g < lm.size(); ++g) {
    if (lm[g].size() != nbest.groups[g].candidates.size()) {
      throw ContractError("lm scores for group " + std::to_string(g) + " are misaligned with its candidates");
    }
  }
}

}  // namespace

void NBestList::validate() const {
  for (const auto& g : groups) {
    if (g.candidates.empty()) throw ContractError("n-best group '" + g.source_id + "' has no candidates");
    for (const auto& c : g.candidates) {
      if (!std::isfinite(c.base_score)) {
        throw ContractError("n-best group '" + g.source_id + "' has a non-finite base score");
      }
    }
  }
}

std::size_t NBestList::candidate_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.candidates.size();
  return n;
}

NBestList parse_nbest(std::string_view tsv, const std::vector<std::string>& refs) {
  NBestList list;
  std::unordered_map<std::string, std::size_t> group_of;
  std::vector<std::vector<std::pair<long, Candidate>>> ranked;
  std::istringstream in{std::string(tsv)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (int c = 0; c < 3; ++c) {
      const auto tab = line.find('\t', start);
      if (tab == std::string::npos) throw ContractError("n-best line " + std::to_string(lineno) + ": expected 4 columns");
      cols.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    cols.push_back(line.substr(start));
    long rank = 0;
    double score = 0.0;
    auto r1 = std::from_chars(cols[1].data(), cols[1].data() + cols[1].size(), rank);
    auto r2 = std::from_chars(cols[2].data(), cols[2].data() + cols[2].size(), score);
    if (r1.ec != std::errc() || r2.ec != std::errc()) {
      throw ContractError("n-best line " + std::to_string(lineno) + ": bad rank or score");
    }
    auto [it, inserted] = group_of.emplace(cols[0], list.groups.size());
    if (inserted) {
      list.groups.push_back({cols[0], {}, {}});
      ranked.emplace_back();
    }
    ranked[it->second].push_back({rank, Candidate{cols[3], score}});
  }
  if (refs.size() != list.groups.size()) {
    throw ContractError("reference file has " + std::to_string(refs.size()) + " lines for " +
                        std::to_string(list.groups.size()) + " sources");
  }
  for (std::size_t g = 0; g < list.groups.size(); ++g) {
    std::stable_sort(ranked[g].begin(), ranked[g].end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [rank, cand] : ranked[g]) list.groups[g].candidates.push_back(std::move(cand));
    list.groups[g].reference = refs[g];
  }
  list.validate();
  return list;
}

NBestList read_nbest(const std::string& nbest_path, const std::string& refs_path) {
  std::ifstream f(nbest_path, std::ios::binary);
  if (!f) throw IoError("cannot read n-best file '" + nbest_path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  std::vector<std::string> refs = read_lines(refs_path);
  while (!refs.empty() && refs.back().empty()) refs.pop_back();
  return parse_nbest(buf.str(), refs);
}

LmScores score_candidates(const NBestList& nbest, const std::function<double(const std::string&)>& score) {
  LmScores out;
  out.reserve(nbest.groups.size());
  for (const auto& g : nbest.groups) {
    out.emplace_back();
    for (const auto& c : g.candidates) out.back().push_back(score(c.text));
  }
  return out;
}

std::pair<NBestList, NBestList> split_nbest(const NBestList& nbest, double fraction) {
  if (fraction < 0.0 || fraction > 1.0) throw ContractError("split fraction must be in [0,1]");
  const auto cut = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(nbest.groups.size())));
  NBestList a, b;
  a.groups.assign(nbest.groups.begin(), nbest.groups.begin() + static_cast<std::ptrdiff_t>(cut));
  b.groups.assign(nbest.groups.begin() + static_cast<std::ptrdiff_t>(cut), nbest.groups.end());
  return {std::move(a), std::move(b)};
}

std::vector<std::size_t> rerank(const NBestList& nbest, const LmScores& lm_scores, double lambda) {
  check_aligned(nbest, lm_scores);
  std::vector<std::size_t> pick(nbest.groups.size(), 0);
  for (std::size_t g = 0; g < nbest.groups.size(); ++g) {
    const auto& cands = nbest.groups[g].candidates;
    if (cands.empty()) throw ContractError("n-best group '" + nbest.groups[g].source_id + "' has no candidates");
    double best = cands[0].base_score + lambda * lm_scores[g][0];
    for (std::size_t c = 1; c < cands.size(); ++c) {
      const double v = cands[c].base_score + lambda * lm_scores[g][c];
      if (v > best) {
        best = v;
        pick[g] = c;
      }
    }
  }
  return pick;
}

void LambdaGrid::validate() const {
  if (!(lo <= hi)) throw ContractError("lambda grid: lo must not exceed hi");
  if (!(step > 0.0)) throw ContractError("lambda grid: step must be positive");
}

std::vector<double> LambdaGrid::points() const {
  validate();
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + static_cast<double>(i) * step;
  return out;
}

LambdaGrid LambdaGrid::parse(const std::string& text) {
  double v[3];
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    const auto end = i < 2 ? text.find(':', start) : text.size();
    if (end == std::string::npos) throw ContractError("lambda grid '" + text + "' must look like lo:hi:step");
    auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + end, v[i]);
    if (ec != std::errc() || ptr != text.data() + end) {
      throw ContractError("lambda grid '" + text + "' must look like lo:hi:step");
    }
    start = end + 1;
  }
  LambdaGrid g{v[0], v[1], v[2]};
  g.validate();
  return g;
}

Metric parse_metric(std::string_view name) {
  if (name == "bleu") return Metric::Bleu;
  if (name == "wer") return Metric::Wer;
  throw ContractError("unknown metric '" + std::string(name) + "' (expected bleu or wer)");
}

std::string to_string(Metric m) { return m == Metric::Bleu ? "bleu" : "wer"; }

bool metric_better(Metric m, double a, double b) { return m == Metric::Bleu ? a > b : a < b; }

std::vector<std::string> selected_texts(const NBestList& nbest, const std::vector<std::size_t>& selection) {
  std::vector<std::string> out;
  out.reserve(selection.size());
  for (std::size_t g = 0; g < selection.size(); ++g) out.push_back(nbest.groups[g].candidates.at(selection[g]).text);
  return out;
}

std::vector<std::string> references(const NBestList& nbest) {
  std::vector<std::string> out;
  out.reserve(nbest.groups.size());
  for (const auto& g : nbest.groups) out.push_back(g.reference);
  return out;
}

double evaluate_selection(const NBestList& nbest, const std::vector<std::size_t>& selection, Metric metric) {
  const auto hyps = selected_texts(nbest, selection);
  const auto refs = references(nbest);
  return metric == Metric::Bleu ? bleu(refs, hyps) : wer(refs, hyps);
}

TuneResult tune_lambda(const NBestList& dev, const LmScores& lm_scores, const LambdaGrid& grid, Metric metric) {
  const auto lambdas = grid.points();
  if (lambdas.empty()) throw ContractError("lambda grid is empty");
  TuneResult r;
  r.baseline_metric = evaluate_selection(dev, rerank(dev, lm_scores, 0.0), metric);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double m = evaluate_selection(dev, rerank(dev, lm_scores, lambdas[i]), metric);
    r.curve.emplace_back(lambdas[i], m);
    if (i == 0 || metric_better(metric, m, r.metric)) {
      r.lambda = lambdas[i];
      r.metric = m;
    }
  }
  return r;
}

double bleu(const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
  if (refs.size() != hyps.size()) throw ContractError("bleu: reference and hypothesis counts differ");
  if (refs.empty()) throw ContractError("bleu: no sentence pairs");
  BleuStats stats;
  for (std::size_t i = 0; i < refs.size(); ++i) stats.add(refs[i], hyps[i]);
  return stats.score();
}

double sentence_bleu(const std::string& ref, const std::string& hyp) {
  BleuStats stats;
  stats.add(ref, hyp);
  return stats.score();
}

std::size_t word_edit_distance(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  std::vector<std::size_t> prev(hyp.size() + 1), cur(hyp.size() + 1);
  for (std::size_t j = 0; j <= hyp.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hyp.size()];
}

double wer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
  if (refs.size() != hyps.size()) throw ContractError("wer: reference and hypothesis counts differ");
  std::size_t edits = 0, ref_words = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto r = words(refs[i]);
    edits += word_edit_distance(r, words(hyps[i]));
    ref_words += r.size();
  }
  if (ref_words == 0) throw ContractError("wer: reference corpus has no words");
  return static_cast<double>(edits) / static_cast<double>(ref_words);
}

std::vector<std::size_t> oracle_selection(const NBestList& nbest, Metric metric) {
  std::vector<std::size_t> pick(nbest.groups.size(), 0);
  for (std::size_t g = 0; g < nbest.groups.size(); ++g) {
    const auto& grp = nbest.groups[g];
    const auto ref = words(grp.reference);
    double best = 0.0;
    for (std::size_t c = 0; c < grp.candidates.size(); ++c) {
      const double v = metric == Metric::Bleu
                           ? sentence_bleu(grp.reference, grp.candidates[c].text)
                           : static_cast<double>(word_edit_distance(ref, words(grp.candidates[c].text)));
      if (c == 0 || metric_better(metric, v, best)) {
        best = v;
        pick[g] = c;
      }
    }
  }
  return pick;
}

double oracle(const NBestList& nbest, Metric metric) {
  return evaluate_selection(nbest, oracle_selection(nbest, metric), metric);
}

}  // namespace slm
