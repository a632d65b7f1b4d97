#include "slm/selftest.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include "slm/gradcheck.hpp"
#include "slm/masks.hpp"
#include "slm/objectives.hpp"

namespace slm {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

CheckResult leakage_suite(const ModelParams& params, std::size_t real) {
  const auto start = Clock::now();
  CheckResult r{"leakage", true, {}, 0.0};
  const auto vocab = static_cast<int>(params.config.vocab_size);
  std::vector<int> tokens(real + 2, 0);
  tokens.front() = kBos;
  tokens.back() = kEos;
  std::size_t sequences = 0, substitutions = 0;

  std::vector<int> digits(real, 0);
  while (true) {
    for (std::size_t p = 0; p < real; ++p) tokens[p + 1] = digits[p];
    const TokenSeq seq(tokens);
    const SentenceScore base = score_sentence(params, seq);
    ++sequences;
    for (std::size_t p = 0; p < real; ++p) {
      for (int v = 0; v < vocab; ++v) {
        if (v == seq[p + 1]) continue;
        ++substitutions;
        const SentenceScore other = score_sentence(params, seq.with(p + 1, v));
        if (other.log_probs[p] != base.log_probs[p]) {
          std::ostringstream msg;
          msg << "position " << p + 1 << " changed when its token " << seq[p + 1] << " became " << v;
          r.passed = false;
          r.detail = msg.str();
          r.seconds = since(start);
          return r;
        }
      }
    }
    std::size_t d = 0;
    while (d < real && ++digits[d] == vocab) digits[d++] = 0;
    if (d == real) break;
  }
  std::ostringstream msg;
  msg << sequences << " sequences, " << substitutions << " substitutions, all bit-identical";
  r.detail = msg.str();
  r.seconds = since(start);
  return r;
}

CheckResult mask_suite(std::size_t max_n) {
  const auto start = Clock::now();
  CheckResult r{"masks", true, {}, 0.0};
  auto fail = [&](const std::string& why) {
    r.passed = false;
    r.detail = why;
    r.seconds = since(start);
    return r;
  };
  for (std::size_t n = kMinSequenceLength; n <= max_n; ++n) {
    const MaskSet m = build_masks(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (m.query(i, j) != (j < i) || m.query(i, n + j) != (j > i)) {
          return fail("n=" + std::to_string(n) + ": query row " + std::to_string(i) + " has wrong visibility");
        }
        if (m.forward(i, j) != (j <= i) || m.backward(i, j) != (j >= i)) {
          return fail("n=" + std::to_string(n) + ": content row " + std::to_string(i) + " has wrong visibility");
        }
      }
    }
    for (std::size_t layers = 1; layers <= 4; ++layers) {
      const LeakageReport rep = verify_no_leakage(m, layers);
      if (!rep.passed) return fail("n=" + std::to_string(n) + ": " + rep.message);
    }
    const LeakageReport bad = verify_no_leakage(corrupted_full_content_masks(n), 4);
    if (bad.passed || bad.failing_depth != 2u) {
      return fail("n=" + std::to_string(n) + ": corrupted content masks were not caught at depth 2");
    }
  }
  r.detail = "n=3.." + std::to_string(max_n) + ", depths 1-4; corrupted masks fail at depth 2";
  r.seconds = since(start);
  return r;
}

CheckResult gradient_suite(std::uint64_t seed, double tolerance) {
  const auto start = Clock::now();
  CheckResult r{"gradients", true, {}, 0.0};
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.d_model = 16;
  cfg.heads = 2;
  cfg.d_ff = 32;
  cfg.vocab_size = 12;
  cfg.max_len = 8;
  cfg.dropout = 0.0;
  ModelParams params = init_model(cfg, seed);
  const std::vector<TokenSeq> batch{TokenSeq(std::vector<int>{kBos, 5, 9, 7, kEos}),
                                    TokenSeq(std::vector<int>{kBos, 11, 6, 6, 8, kEos})};

  const LossAndGrads lg = loss_and_grads(params, batch, ObjectiveOptions{}, nullptr);
  auto named = params.named();
  std::size_t checked = 0;
  double worst = 0.0;
  std::string worst_name;
  for (std::size_t t = 0; t < named.size(); ++t) {
    const auto fd = finite_diff_grad([&] { return slm_loss(params, batch); }, named[t].tensor->data(), 1e-5);
    for (std::size_t i = 0; i < fd.size(); ++i) {
      const double e = relative_error(lg.grads[t][i], fd[i]);
      ++checked;
      if (e > worst) {
        worst = e;
        worst_name = named[t].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  r.passed = worst <= tolerance;
  std::ostringstream msg;
  msg << checked << " coordinates, max relative error " << worst << " at " << worst_name;
  r.detail = msg.str();
  r.seconds = since(start);
  return r;
}

std::string format_result(const CheckResult& r) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.seconds << "s): " << r.detail;
  return out.str();
}

bool run_selftest(std::ostream& out, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.d_model = 32;
  cfg.heads = 2;
  cfg.d_ff = 64;
  cfg.vocab_size = 8;
  cfg.max_len = 8;
  cfg.dropout = 0.0;
  const std::vector<CheckResult> results{leakage_suite(init_model(cfg, seed)), mask_suite(), gradient_suite(seed)};
  bool ok = true;
  for (const auto& r : results) {
    out << format_result(r) << '\n';
    ok = ok && r.passed;
  }
  return ok;
}

}  // namespace slm
