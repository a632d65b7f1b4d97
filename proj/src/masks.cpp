#include "slm/masks.hpp"

#include <sstream>

#include "slm/errors.hpp"

namespace slm {

namespace {

using PositionSet = std::vector<std::uint8_t>;

void merge_into(PositionSet& dst, const PositionSet& src) {
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] |= src[k];
}

void dump_matrix(std::ostringstream& out, const BoolMatrix& m, MaskFormat format) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (format == MaskFormat::Ascii) {
        out << (m(i, j) ? '#' : '.');
      } else {
        if (j) out << ',';
        out << (m(i, j) ? '1' : '0');
      }
    }
    out << '\n';
  }
}

}  // namespace

MaskSet build_masks(std::size_t n) {
  if (n < kMinSequenceLength) {
    throw LengthError("mask length " + std::to_string(n) +
                      " is too short: two sentinels plus at least one real token need n >= 3");
  }
  MaskSet m{n, causal_mask(n), anticausal_mask(n), BoolMatrix(n, 2 * n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      m.query.set(i, j, j < i);
      m.query.set(i, n + j, j > i);
    }
  }
  return m;
}

BoolMatrix causal_mask(std::size_t n) {
  BoolMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) m.set(i, j, true);
  }
  return m;
}

BoolMatrix anticausal_mask(std::size_t n) {
  BoolMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) m.set(i, j, true);
  }
  return m;
}

BoolMatrix full_mask(std::size_t n) { return BoolMatrix(n, n, true); }

MaskSet corrupted_full_content_masks(std::size_t n) {
  MaskSet m = build_masks(n);
  m.forward = full_mask(n);
  m.backward = full_mask(n);
  return m;
}

LeakageReport verify_no_leakage(const MaskSet& masks, std::size_t layers) {
  const std::size_t n = masks.n;
  LeakageReport report;
  report.layers = layers;

  std::vector<PositionSet> fwd(n, PositionSet(n, 0));
  std::vector<PositionSet> bwd(n, PositionSet(n, 0));
  std::vector<PositionSet> query(n, PositionSet(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    fwd[i][i] = 1;
    bwd[i][i] = 1;
  }

  auto fail = [&](std::size_t depth, std::size_t pos, std::string why) {
    report.passed = false;
    report.failing_depth = depth;
    report.failing_position = pos;
    report.message = std::move(why);
    return report;
  };

  for (std::size_t depth = 1; depth <= layers; ++depth) {
    auto next_fwd = fwd;
    auto next_bwd = bwd;
    auto next_query = query;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (masks.forward(i, j)) merge_into(next_fwd[i], fwd[j]);
        if (masks.backward(i, j)) merge_into(next_bwd[i], bwd[j]);
        if (masks.query(i, j)) merge_into(next_query[i], fwd[j]);
        if (masks.query(i, n + j)) merge_into(next_query[i], bwd[j]);
      }
    }
    fwd = std::move(next_fwd);
    bwd = std::move(next_bwd);
    query = std::move(next_query);

    for (std::size_t i = 0; i < n; ++i) {
      if (query[i][i]) {
        return fail(depth, i,
                    "query state " + std::to_string(i) + " reaches its own token at depth " + std::to_string(depth));
      }
      if (depth == 1) {
        for (std::size_t j = 0; j < n; ++j) {
          if (j != i && !query[i][j]) {
            return fail(depth, i,
                        "query state " + std::to_string(i) + " cannot see position " + std::to_string(j) +
                            " at depth 1");
          }
        }
      }
    }
  }
  report.message = "no query state reaches its own token through " + std::to_string(layers) + " layers";
  return report;
}

std::string dump_masks(const MaskSet& masks, MaskFormat format) {
  std::ostringstream out;
  out << "# forward (n=" << masks.n << ")\n";
  dump_matrix(out, masks.forward, format);
  out << "# backward (n=" << masks.n << ")\n";
  dump_matrix(out, masks.backward, format);
  out << "# query (n=" << masks.n << ", columns: forward 0.." << masks.n - 1 << " | backward " << masks.n << ".."
      << 2 * masks.n - 1 << ")\n";
  dump_matrix(out, masks.query, format);
  return out.str();
}

}  // namespace slm
