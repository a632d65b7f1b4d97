#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "slm/model.hpp"

namespace slm {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Every sequence of `real` tokens over the model's vocabulary is scored, and
// each position is re-scored under all other tokens at that position. The
// log-probability row of the substituted position must stay bit-identical.
CheckResult leakage_suite(const ModelParams& params, std::size_t real = 3);

// Mask definitions and reachability for n in [3, max_n], layers 1..4, plus the
// corrupted full-content control that must fail at depth 2.
CheckResult mask_suite(std::size_t max_n = 64);

// Tape gradients of the SLM loss against central differences of the scoring
// path, for every parameter of a 2-layer d=16 model.
CheckResult gradient_suite(std::uint64_t seed = 1, double tolerance = 1e-4);

// Leakage (fresh V=8, d=32 model), masks and gradients. Prints one
// PASS/FAIL line per suite and returns true when all pass.
bool run_selftest(std::ostream& out, std::uint64_t seed = 1);

std::string format_result(const CheckResult& r);

}  // namespace slm
