#include "slm/analysis.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "slm/errors.hpp"

namespace slm {

namespace {

void require_uniform_length(std::span<const TokenSeq> subset, std::size_t n) {
  if (subset.empty()) throw ContractError("position analysis needs at least one sentence");
  for (std::size_t s = 0; s < subset.size(); ++s) {
    if (subset[s].real_count() != n) {
      throw ContractError("sentence " + std::to_string(s) + " has " + std::to_string(subset[s].real_count()) +
                          " tokens; every sentence must have " + std::to_string(n));
    }
  }
}

}  // namespace

PositionProfile position_profile(const Scorer& scorer, std::span<const TokenSeq> subset) {
  if (subset.empty()) throw ContractError("position_profile: empty subset");
  const std::size_t n = subset[0].real_count();
  require_uniform_length(subset, n);
  PositionProfile p{n, std::vector<double>(n, 0.0), subset.size()};
  for (const TokenSeq& seq : subset) {
    const SentenceScore s = scorer(seq);
    for (std::size_t i = 0; i < n; ++i) p.per_position_ce[i] -= s.per_token[i];
  }
  for (double& v : p.per_position_ce) v /= static_cast<double>(subset.size());
  return p;
}

double token_accuracy(const Scorer& scorer, std::span<const TokenSeq> subset, std::size_t n) {
  require_uniform_length(subset, n);
  double total = 0.0;
  for (const TokenSeq& seq : subset) {
    const SentenceScore s = scorer(seq);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += s.predicted[i] == seq.real()[i] ? 1 : 0;
    total += static_cast<double>(hits) / static_cast<double>(n);
  }
  return total / static_cast<double>(subset.size());
}

std::vector<TokenSeq> sentences_of_length(std::span<const TokenSeq> corpus, std::size_t n) {
  std::vector<TokenSeq> out;
  std::copy_if(corpus.begin(), corpus.end(), std::back_inserter(out),
               [n](const TokenSeq& s) { return s.real_count() == n; });
  return out;
}

std::string profile_csv(const PositionProfile& profile) {
  std::ostringstream out;
  out.precision(10);
  out << "position,cross_entropy\n";
  for (std::size_t i = 0; i < profile.n; ++i) out << i + 1 << ',' << profile.per_position_ce[i] << '\n';
  return out.str();
}

std::string profile_ascii(const PositionProfile& profile, std::size_t width) {
  const double top = std::max(1e-12, *std::max_element(profile.per_position_ce.begin(), profile.per_position_ce.end()));
  std::ostringstream out;
  for (std::size_t i = 0; i < profile.n; ++i) {
    const double v = profile.per_position_ce[i];
    const auto bar = static_cast<std::size_t>(v / top * static_cast<double>(width) + 0.5);
    out << std::setw(3) << i + 1 << " | " << std::string(bar, '#') << ' ' << std::fixed << std::setprecision(4) << v
        << '\n';
  }
  return out.str();
}

std::vector<PassCost> cost_report(std::span<const std::size_t> n_values, std::span<const std::size_t> k_values) {
  std::vector<PassCost> rows;
  for (std::size_t n : n_values) {
    rows.push_back(pass_cost(ModelKind::Clm, n));
    for (std::size_t k : k_values) rows.push_back(pass_cost(ModelKind::Mlm, n, k));
    rows.push_back(pass_cost(ModelKind::BiLm, n));
    rows.push_back(pass_cost(ModelKind::Slm, n));
  }
  return rows;
}

std::string cost_report_table(std::span<const PassCost> rows) {
  std::ostringstream out;
  out << "model\tk\tn\tpasses\trelative_compute\n";
  for (const PassCost& r : rows) {
    out << to_string(r.kind) << '\t' << (r.kind == ModelKind::Mlm ? std::to_string(r.k) : "-") << '\t' << r.n << '\t'
        << r.passes << "\tx" << r.relative_compute << '\n';
  }
  return out.str();
}

}  // namespace slm
