#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slm/analysis.hpp"
#include "slm/baselines.hpp"
#include "slm/checkpoint.hpp"
#include "slm/errors.hpp"
#include "slm/masks.hpp"
#include "slm/rerank.hpp"
#include "slm/selftest.hpp"
#include "slm/trainer.hpp"
#include "slm/vocab.hpp"

namespace fs = std::filesystem;
using namespace slm;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

Checkpoint load_for(const std::string& path, const std::string& model) {
  Checkpoint ck = load_checkpoint(path);
  if (!model.empty() && parse_model_kind(model) != ck.params.kind) {
    throw ContractError("--model " + model + " does not match checkpoint kind " + to_string(ck.params.kind));
  }
  return ck;
}

struct VocabArgs {
  std::string corpus, out;
  std::size_t max_size = 2000;
  bool char_level = false;
};

void cmd_build_vocab(const VocabArgs& a) {
  build_vocab(read_lines(a.corpus), a.max_size, a.char_level).save(a.out);
}

struct TrainArgs {
  std::string model = "slm", config, corpus, out, vocab;
  std::optional<std::uint64_t> seed;
};

void cmd_train(const TrainArgs& a) {
  RunConfig rc = a.config.empty() ? RunConfig{} : parse_run_config(slurp(a.config));
  if (a.seed) rc.train.seed = *a.seed;
  const ModelKind kind = parse_model_kind(a.model);
  const auto lines = read_lines(a.corpus);
  const Vocabulary vocab =
      a.vocab.empty() ? build_vocab(lines, rc.vocab_max, rc.char_level) : Vocabulary::load(a.vocab, rc.char_level);
  rc.model.vocab_size = vocab.size();

  std::vector<TokenSeq> corpus;
  corpus.reserve(lines.size());
  for (const auto& l : lines) corpus.push_back(vocab.encode(l));

  fs::create_directories(a.out);
  const fs::path dir(a.out);
  vocab.save((dir / "vocab.txt").string());
  auto on_ckpt = [&](std::size_t step, const ModelParams& p) {
    if (step == rc.train.total_steps) return;
    save_checkpoint((dir / ("step-" + std::to_string(step) + ".ckpt")).string(), p, vocab);
  };
  auto on_log = [&](const LossPoint& pt) {
    std::cerr << "step " << pt.step << " lr " << num(pt.lr) << " loss " << num(pt.loss) << '\n';
  };
  const TrainResult r = train(kind, rc.model, rc.train, corpus, on_ckpt, on_log);
  if (r.skipped) std::cerr << "skipped " << r.skipped << " empty or over-long sentences\n";
  save_checkpoint((dir / "model.ckpt").string(), r.params, vocab);
  write_file((dir / "loss.csv").string(), loss_curve_csv(r.curve, rc.train.log_interval));
}

struct ScoreArgs {
  std::string model, k = "1", ckpt, input;
  bool per_token = false;
  std::uint64_t seed = 1;
};

void cmd_score(const ScoreArgs& a) {
  const Checkpoint ck = load_for(a.ckpt, a.model);
  const Scorer scorer = make_scorer(ck.params, MlmK::parse(a.k), a.seed);
  const auto lines = read_lines(a.input);
  std::cout << "sentence_id\ttotal_logprob\tn_tokens\tpasses" << (a.per_token ? "\tper_token" : "") << '\n';
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const TokenSeq seq = ck.vocab.encode(lines[i], ck.params.config.max_len);
    if (seq.real_count() == 0) throw ContractError("sentence " + std::to_string(i) + " is empty");
    const SentenceScore s = scorer(seq);
    std::cout << i << '\t' << num(s.total) << '\t' << seq.real_count() << '\t' << s.passes;
    if (a.per_token) {
      std::cout << '\t';
      for (std::size_t t = 0; t < s.per_token.size(); ++t) std::cout << (t ? "," : "") << num(s.per_token[t]);
    }
    std::cout << '\n';
  }
}

struct RerankArgs {
  std::string nbest, refs, ckpt, model, grid = "0:2:0.05", metric = "bleu", k = "1", out;
  double dev_split = 0.5;
  bool length_norm = false;
  std::uint64_t seed = 1;
};

void cmd_rerank(const RerankArgs& a) {
  const NBestList nb = read_nbest(a.nbest, a.refs);
  const Checkpoint ck = load_for(a.ckpt, a.model);
  const Scorer scorer = make_scorer(ck.params, MlmK::parse(a.k), a.seed);
  const LmScores lm = score_candidates(nb, [&](const std::string& text) {
    const TokenSeq seq = ck.vocab.encode(text, ck.params.config.max_len);
    if (seq.real_count() == 0) throw ContractError("n-best candidate is empty");
    const SentenceScore s = scorer(seq);
    if (!a.length_norm) return s.total;
    const std::size_t scored = s.per_token.size() + (ck.params.kind == ModelKind::Clm ? 1 : 0);
    return s.total / static_cast<double>(scored);
  });
  const Metric metric = parse_metric(a.metric);
  const LambdaGrid grid = LambdaGrid::parse(a.grid);

  const auto [dev, test] = split_nbest(nb, a.dev_split);
  if (dev.groups.empty()) throw ContractError("--dev-split leaves no dev groups");
  const LmScores dev_lm(lm.begin(), lm.begin() + static_cast<std::ptrdiff_t>(dev.groups.size()));
  const LmScores test_lm(lm.begin() + static_cast<std::ptrdiff_t>(dev.groups.size()), lm.end());
  const TuneResult tuned = tune_lambda(dev, dev_lm, grid, metric);

  std::cout << "metric\t" << to_string(metric) << '\n';
  std::cout << "lambda\t" << num(tuned.lambda) << '\n';
  std::cout << "dev_baseline\t" << num(tuned.baseline_metric) << '\n';
  std::cout << "dev_reranked\t" << num(tuned.metric) << '\n';
  std::cout << "dev_oracle\t" << num(oracle(dev, metric)) << '\n';
  if (!test.groups.empty()) {
    std::cout << "test_baseline\t" << num(evaluate_selection(test, rerank(test, test_lm, 0.0), metric)) << '\n';
    const auto picks = rerank(test, test_lm, tuned.lambda);
    std::cout << "test_reranked\t" << num(evaluate_selection(test, picks, metric)) << '\n';
    std::cout << "test_oracle\t" << num(oracle(test, metric)) << '\n';
    if (!a.out.empty()) {
      std::ostringstream sel;
      const auto texts = selected_texts(test, picks);
      for (std::size_t g = 0; g < texts.size(); ++g) sel << test.groups[g].source_id << '\t' << texts[g] << '\n';
      write_file(a.out, sel.str());
    }
  }
}

struct PositionsArgs {
  std::string ckpt, model, corpus, out, k = "1";
  std::size_t len = 20;
  bool ascii = false;
  std::uint64_t seed = 1;
};

void cmd_positions(const PositionsArgs& a) {
  const Checkpoint ck = load_for(a.ckpt, a.model);
  std::vector<TokenSeq> corpus;
  for (const auto& l : read_lines(a.corpus)) corpus.push_back(ck.vocab.encode(l));
  const auto subset = sentences_of_length(corpus, a.len);
  if (subset.empty()) throw ContractError("corpus has no sentences of length " + std::to_string(a.len));
  const Scorer scorer = make_scorer(ck.params, MlmK::parse(a.k), a.seed);
  const PositionProfile prof = position_profile(scorer, subset);
  if (a.out.empty()) std::cout << profile_csv(prof);
  else write_file(a.out, profile_csv(prof));
  if (a.ascii) std::cout << profile_ascii(prof);
  std::cerr << "sentences " << prof.sample_count << ", token accuracy " << num(token_accuracy(scorer, subset, a.len))
            << '\n';
}

struct CostArgs {
  std::vector<std::size_t> n{20}, k{1, 2, 3};
};

void cmd_cost(const CostArgs& a) { std::cout << cost_report_table(cost_report(a.n, a.k)); }

struct MasksArgs {
  std::size_t len = 5;
  std::string format = "ascii";
};

void cmd_masks(const MasksArgs& a) {
  MaskFormat f;
  if (a.format == "ascii") f = MaskFormat::Ascii;
  else if (a.format == "csv") f = MaskFormat::Csv;
  else throw ContractError("unknown mask format '" + a.format + "' (expected ascii or csv)");
  std::cout << dump_masks(build_masks(a.len), f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sliding language model toolkit: train, score, rerank and analyze toy LMs."};
  app.require_subcommand(1);

  VocabArgs va;
  auto* bv = app.add_subcommand("build-vocab", "Build a frequency-ranked vocabulary file");
  bv->add_option("--corpus", va.corpus, "One sentence per line")->required();
  bv->add_option("--out", va.out, "Vocabulary file to write")->required();
  bv->add_option("--max-size", va.max_size, "Vocabulary size including the 5 reserved tokens");
  bv->add_flag("--char", va.char_level, "Split into characters instead of whitespace tokens");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train a model; writes model.ckpt, loss.csv and vocab.txt");
  tr->add_option("--model", ta.model, "slm, clm, mlm or bilm");
  tr->add_option("--config", ta.config, "key=value training config");
  tr->add_option("--corpus", ta.corpus, "One sentence per line")->required();
  tr->add_option("--out", ta.out, "Output directory")->required();
  tr->add_option("--vocab", ta.vocab, "Existing vocabulary file (default: build from corpus)");
  tr->add_option("--seed", ta.seed, "Overrides the config seed");

  ScoreArgs sa;
  auto* sc = app.add_subcommand("score", "Score sentences; TSV to stdout");
  sc->add_option("--model", sa.model, "Expected checkpoint kind");
  sc->add_option("--k", sa.k, "MLM tokens masked per pass: integer or n/D");
  sc->add_option("--ckpt", sa.ckpt, "Checkpoint file")->required();
  sc->add_option("--input", sa.input, "One sentence per line")->required();
  sc->add_flag("--per-token", sa.per_token, "Append comma-separated per-token log-probabilities");
  sc->add_option("--seed", sa.seed, "MLM partition seed");

  RerankArgs ra;
  auto* rr = app.add_subcommand("rerank", "Tune lambda on dev n-best lists and report test metrics");
  rr->add_option("--nbest", ra.nbest, "TSV: source_id, rank, base_score, text")->required();
  rr->add_option("--refs", ra.refs, "One reference per source, in first-appearance order")->required();
  rr->add_option("--ckpt", ra.ckpt, "Checkpoint file")->required();
  rr->add_option("--model", ra.model, "Expected checkpoint kind");
  rr->add_option("--grid", ra.grid, "lo:hi:step");
  rr->add_option("--metric", ra.metric, "bleu or wer");
  rr->add_option("--dev-split", ra.dev_split, "Fraction of groups used for tuning");
  rr->add_flag("--length-norm", ra.length_norm, "Divide LM totals by the number of scored tokens");
  rr->add_option("--k", ra.k, "MLM tokens masked per pass");
  rr->add_option("--seed", ra.seed, "MLM partition seed");
  rr->add_option("--out", ra.out, "Write the reranked test selection here");

  auto* an = app.add_subcommand("analyze", "Diagnostics");
  an->require_subcommand(1);
  PositionsArgs pa;
  auto* pos = an->add_subcommand("positions", "Per-position cross-entropy profile (CSV)");
  pos->add_option("--ckpt", pa.ckpt, "Checkpoint file")->required();
  pos->add_option("--model", pa.model, "Expected checkpoint kind");
  pos->add_option("--len", pa.len, "Real tokens per sentence");
  pos->add_option("--corpus", pa.corpus, "One sentence per line")->required();
  pos->add_option("--out", pa.out, "CSV file (default stdout)");
  pos->add_flag("--ascii", pa.ascii, "Also print a bar chart");
  pos->add_option("--k", pa.k, "MLM tokens masked per pass");
  pos->add_option("--seed", pa.seed, "MLM partition seed");
  CostArgs ca;
  auto* cost = an->add_subcommand("cost", "Forward passes per sentence for each scorer");
  cost->add_option("--n", ca.n, "Sentence lengths")->delimiter(',');
  cost->add_option("--k", ca.k, "MLM k values")->delimiter(',');

  auto* mk = app.add_subcommand("masks", "Attention masks");
  mk->require_subcommand(1);
  MasksArgs ma;
  auto* dump = mk->add_subcommand("dump", "Print the forward, backward and query masks");
  dump->add_option("--len", ma.len, "Sequence length including BOS/EOS");
  dump->add_option("--format", ma.format, "ascii or csv");

  std::uint64_t st_seed = 1;
  auto* st = app.add_subcommand("selftest", "Run the leakage, mask and gradient suites");
  st->add_option("--seed", st_seed, "Model initialization seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[usage]: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*bv) cmd_build_vocab(va);
    else if (*tr) cmd_train(ta);
    else if (*sc) cmd_score(sa);
    else if (*rr) cmd_rerank(ra);
    else if (*pos) cmd_positions(pa);
    else if (*cost) cmd_cost(ca);
    else if (*dump) cmd_masks(ma);
    else if (*st) return run_selftest(std::cout, st_seed) ? 0 : 1;
  } catch (const slm::Error& e) {
    std::cerr << "error[" << e.kind() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
