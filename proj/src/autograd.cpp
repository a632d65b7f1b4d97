#include "slm/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "slm/errors.hpp"

namespace slm {

namespace {

// C[m,p] += A[m,k] * B[k,p]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * p;
    const double* ai = a + i * k;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = ai[t];
      const double* bt = b + t * p;
      for (std::size_t j = 0; j < p; ++j) ci[j] += av * bt[j];
    }
  }
}

// C[m,p] += A[m,k] * B[p,k]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < p; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += ai[t] * bj[t];
      c[i * p + j] += acc;
    }
  }
}

// C[k,p] += A[m,k]^T * B[m,p]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * p;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = ai[t];
      double* ct = c + t * p;
      for (std::size_t j = 0; j < p; ++j) ct[j] += av * bi[j];
    }
  }
}

void require_rank(const Tensor& t, std::size_t rank, std::string_view op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

}  // namespace

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::constant(Tensor t) {
  Node n;
  n.owned = std::move(t);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Tape::leaf(Tensor t) {
  Node n;
  n.owned = std::move(t);
  n.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Tape::param(const Tensor& t) {
  Node n;
  n.external = &t;
  n.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.owned;
}

const Tensor& Tape::value(Var v) const {
  if (v.tape != this) throw ContractError("variable used with a tape that did not record it");
  return value(v.id);
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.size() != value(v.id).size()) return Tensor(value(v.id).shape());
  return n.grad;
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  const Tensor& v = value(id);
  if (n.grad.size() != v.size() || n.grad.shape() != v.shape()) n.grad = Tensor(v.shape());
  return n.grad;
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op) + " produced a non-finite value (node " + std::to_string(nodes_.size()) +
                       ")");
  }
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape != this) throw ContractError(std::string(op) + ": input recorded on a different tape");
    needs = needs || nodes_[in.id].requires_grad;
  }
  Node n;
  n.owned = std::move(value);
  n.requires_grad = grad_enabled_ && needs;
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward: loss was recorded on a different tape");
  if (value(loss.id).size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + shape_str(value(loss.id).shape()));
  }
  if (!grad_enabled_) throw ContractError("backward: tape was created with gradients disabled");
  for (Node& n : nodes_) n.grad = Tensor();
  grad_buffer(loss.id).fill(1.0);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, id);
  }
}

namespace ops {

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank(av, 2, "matmul");
  require_rank(bv, 2, "matmul");
  const std::size_t m = av.rows(), k = av.cols(), p = bv.cols();
  if (bv.rows() != k) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_str(av.shape()) + " x " +
                         shape_str(bv.shape()));
  }
  Tensor out({m, p});
  gemm_nn(av.ptr(), bv.ptr(), out.ptr(), m, k, p);
  return a.tape->record("matmul", std::move(out), {a, b}, [a, b, m, k, p](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    if (t.needs_grad(a.id)) gemm_nt(g.ptr(), t.value(b.id).ptr(), t.grad_buffer(a.id).ptr(), m, p, k);
    if (t.needs_grad(b.id)) gemm_tn(t.value(a.id).ptr(), g.ptr(), t.grad_buffer(b.id).ptr(), m, k, p);
  });
}

Var matmul_nt(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank(av, 2, "matmul_nt");
  require_rank(bv, 2, "matmul_nt");
  const std::size_t m = av.rows(), k = av.cols(), p = bv.rows();
  if (bv.cols() != k) {
    throw DimensionError("matmul_nt: inner dimensions disagree " + shape_str(av.shape()) + " x " +
                         shape_str(bv.shape()) + "^T");
  }
  Tensor out({m, p});
  gemm_nt(av.ptr(), bv.ptr(), out.ptr(), m, k, p);
  return a.tape->record("matmul_nt", std::move(out), {a, b}, [a, b, m, k, p](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    if (t.needs_grad(a.id)) gemm_nn(g.ptr(), t.value(b.id).ptr(), t.grad_buffer(a.id).ptr(), m, p, k);
    if (t.needs_grad(b.id)) gemm_tn(g.ptr(), t.value(a.id).ptr(), t.grad_buffer(b.id).ptr(), m, p, k);
  });
}

Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape->record("add", std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    for (Var in : {a, b}) {
      if (!t.needs_grad(in.id)) continue;
      Tensor& dst = t.grad_buffer(in.id);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }
  });
}

Var add_bias(Var x, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require_rank(xv, 2, "add_bias");
  require_rank(bv, 1, "add_bias");
  const std::size_t m = xv.rows(), n = xv.cols();
  if (bv.size() != n) {
    throw DimensionError("add_bias: bias " + shape_str(bv.shape()) + " vs input " + shape_str(xv.shape()));
  }
  Tensor out = xv;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  }
  return x.tape->record("add_bias", std::move(out), {x, bias}, [x, bias, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    if (t.needs_grad(x.id)) {
      Tensor& dx = t.grad_buffer(x.id);
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
    }
    if (t.needs_grad(bias.id)) {
      Tensor& db = t.grad_buffer(bias.id);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) db[j] += g[i * n + j];
      }
    }
  });
}

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape->record("mul", std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    if (t.needs_grad(a.id)) {
      const Tensor& bv = t.value(b.id);
      Tensor& da = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
    }
    if (t.needs_grad(b.id)) {
      const Tensor& av = t.value(a.id);
      Tensor& db = t.grad_buffer(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= s;
  return a.tape->record("scale", std::move(out), {a}, [a, s](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    Tensor& da = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += s * g[i];
  });
}

Var sum(Var a) {
  double acc = 0.0;
  for (double v : a.value().data()) acc += v;
  return a.tape->record("sum", Tensor::scalar(acc), {a}, [a](Tape& t, std::size_t self) {
    const double g = t.out_grad(self)[0];
    Tensor& da = t.grad_buffer(a.id);
    for (double& v : da.data()) v += g;
  });
}

Var gelu(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
  return a.tape->record("gelu", std::move(out), {a}, [a](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    const Tensor& x = t.value(a.id);
    Tensor& da = t.grad_buffer(a.id);
    const double inv_sqrt_2pi = std::numbers::inv_sqrtpi / std::numbers::sqrt2;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = x[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      da[i] += g[i] * (cdf + v * pdf);
    }
  });
}

Var masked_softmax(Var scores, const BoolMatrix& allow) {
  const Tensor& s = scores.value();
  require_rank(s, 2, "masked_softmax");
  const std::size_t n = s.rows(), m = s.cols();
  if (allow.rows() != n || allow.cols() != m) {
    throw DimensionError("masked_softmax: mask is " + std::to_string(allow.rows()) + "x" +
                         std::to_string(allow.cols()) + ", scores are " + shape_str(s.shape()));
  }
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < m; ++j) {
      if (allow(i, j)) {
        mx = std::max(mx, s.at(i, j));
        any = true;
      }
    }
    if (!any) throw ContractError("masked_softmax: row " + std::to_string(i) + " has no allowed entries");
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (allow(i, j)) {
        const double e = std::exp(s.at(i, j) - mx);
        out.at(i, j) = e;
        z += e;
      }
    }
    for (std::size_t j = 0; j < m; ++j) out.at(i, j) /= z;
  }
  return scores.tape->record("masked_softmax", std::move(out), {scores}, [scores, n, m](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    const Tensor& p = t.value(self);
    Tensor& ds = t.grad_buffer(scores.id);
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < m; ++j) dot += p.at(i, j) * g.at(i, j);
      for (std::size_t j = 0; j < m; ++j) ds.at(i, j) += p.at(i, j) * (g.at(i, j) - dot);
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& xv = x.value();
  require_rank(xv, 2, "layer_norm");
  const std::size_t n = xv.rows(), d = xv.cols();
  if (d < 2) throw DimensionError("layer_norm: feature dimension must be at least 2");
  if (gain.value().shape() != Shape{d} || bias.value().shape() != Shape{d}) {
    throw DimensionError("layer_norm: gain/bias must have shape [" + std::to_string(d) + "]");
  }
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  Tensor out({n, d});
  std::vector<double> xhat(n * d);
  std::vector<double> inv_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xv.at(i, j);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xv.at(i, j) - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[i] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xv.at(i, j) - mean) * inv;
      xhat[i * d + j] = h;
      out.at(i, j) = h * gv[j] + bv[j];
    }
  }
  return x.tape->record(
      "layer_norm", std::move(out), {x, gain, bias},
      [x, gain, bias, n, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
        const Tensor& g = t.out_grad(self);
        if (t.needs_grad(gain.id)) {
          Tensor& dg = t.grad_buffer(gain.id);
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) dg[j] += g.at(i, j) * xhat[i * d + j];
          }
        }
        if (t.needs_grad(bias.id)) {
          Tensor& db = t.grad_buffer(bias.id);
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) db[j] += g.at(i, j);
          }
        }
        if (t.needs_grad(x.id)) {
          const Tensor& gv = t.value(gain.id);
          Tensor& dx = t.grad_buffer(x.id);
          const double dd = static_cast<double>(d);
          for (std::size_t i = 0; i < n; ++i) {
            double sum_dh = 0.0, sum_dh_h = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              const double dh = g.at(i, j) * gv[j];
              sum_dh += dh;
              sum_dh_h += dh * xhat[i * d + j];
            }
            for (std::size_t j = 0; j < d; ++j) {
              const double dh = g.at(i, j) * gv[j];
              dx.at(i, j) += inv_std[i] / dd * (dd * dh - sum_dh - xhat[i * d + j] * sum_dh_h);
            }
          }
        }
      });
}

Var cross_entropy(Var logits, std::span<const int> targets) {
  const Tensor& lv = logits.value();
  require_rank(lv, 2, "cross_entropy");
  const std::size_t n = lv.rows(), v = lv.cols();
  if (targets.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(n) + " rows");
  }
  if (n == 0) throw ContractError("cross_entropy: no positions");
  std::vector<int> tg(targets.begin(), targets.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (tg[i] < 0 || static_cast<std::size_t>(tg[i]) >= v) {
      throw IndexError("cross_entropy: target " + std::to_string(tg[i]) + " at row " + std::to_string(i) +
                       " is outside vocabulary of size " + std::to_string(v));
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto lp = log_softmax_row(lv.row(i));
    total -= lp[static_cast<std::size_t>(tg[i])];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return logits.tape->record("cross_entropy", Tensor::scalar(total * inv_n), {logits},
                             [logits, tg = std::move(tg), n, v, inv_n](Tape& t, std::size_t self) {
                               const double g = t.out_grad(self)[0] * inv_n;
                               const Tensor& lv = t.value(logits.id);
                               Tensor& dl = t.grad_buffer(logits.id);
                               for (std::size_t i = 0; i < n; ++i) {
                                 const auto lp = log_softmax_row(lv.row(i));
                                 for (std::size_t j = 0; j < v; ++j) dl.at(i, j) += g * std::exp(lp[j]);
                                 dl.at(i, static_cast<std::size_t>(tg[i])) -= g;
                               }
                             });
}

Var embedding(Var table, std::span<const int> indices) {
  const Tensor& tv = table.value();
  require_rank(tv, 2, "embedding");
  const std::size_t vocab = tv.rows(), n = indices.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= vocab) {
      throw IndexError("embedding: index " + std::to_string(indices[i]) + " outside table of " +
                       std::to_string(vocab) + " rows");
    }
    idx[i] = static_cast<std::size_t>(indices[i]);
  }
  return select_rows(table, idx);
}

Var select_rows(Var x, std::span<const std::size_t> rows) {
  const Tensor& xv = x.value();
  require_rank(xv, 2, "select_rows");
  const std::size_t d = xv.cols();
  Tensor out({rows.size(), d});
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= xv.rows()) {
      throw IndexError("select_rows: row " + std::to_string(idx[i]) + " outside " + shape_str(xv.shape()));
    }
    std::copy_n(xv.row(idx[i]).begin(), d, out.row(i).begin());
  }
  return x.tape->record("select_rows", std::move(out), {x}, [x, idx = std::move(idx), d](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    Tensor& dx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t j = 0; j < d; ++j) dx.at(idx[i], j) += g.at(i, j);
    }
  });
}

Var slice_cols(Var x, std::size_t start, std::size_t count) {
  const Tensor& xv = x.value();
  require_rank(xv, 2, "slice_cols");
  const std::size_t n = xv.rows(), d = xv.cols();
  if (start + count > d) {
    throw DimensionError("slice_cols: columns [" + std::to_string(start) + "," + std::to_string(start + count) +
                         ") outside " + shape_str(xv.shape()));
  }
  Tensor out({n, count});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < count; ++j) out.at(i, j) = xv.at(i, start + j);
  }
  return x.tape->record("slice_cols", std::move(out), {x}, [x, n, start, count](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    Tensor& dx = t.grad_buffer(x.id);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < count; ++j) dx.at(i, start + j) += g.at(i, j);
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  Tape* tape = parts[0].tape;
  const std::size_t n = parts[0].value().rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    require_rank(pv, 2, "concat_cols");
    if (pv.rows() != n) throw DimensionError("concat_cols: row counts differ");
    offsets.push_back(total);
    total += pv.cols();
  }
  Tensor out({n, total});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(pv.row(i).begin(), pv.cols(), out.row(i).begin() + static_cast<std::ptrdiff_t>(offsets[k]));
    }
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape->record("concat_cols", std::move(out), parts,
                      [inputs, offsets = std::move(offsets), n](Tape& t, std::size_t self) {
                        const Tensor& g = t.out_grad(self);
                        for (std::size_t k = 0; k < inputs.size(); ++k) {
                          if (!t.needs_grad(inputs[k].id)) continue;
                          Tensor& dp = t.grad_buffer(inputs[k].id);
                          const std::size_t c = dp.cols();
                          for (std::size_t i = 0; i < n; ++i) {
                            for (std::size_t j = 0; j < c; ++j) dp.at(i, j) += g.at(i, offsets[k] + j);
                          }
                        }
                      });
}

Var concat_rows(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank(av, 2, "concat_rows");
  require_rank(bv, 2, "concat_rows");
  if (av.cols() != bv.cols()) throw DimensionError("concat_rows: column counts differ");
  std::vector<double> data(av.data().begin(), av.data().end());
  data.insert(data.end(), bv.data().begin(), bv.data().end());
  const std::size_t split = av.size();
  Tensor out({av.rows() + bv.rows(), av.cols()}, std::move(data));
  return a.tape->record("concat_rows", std::move(out), {a, b}, [a, b, split](Tape& t, std::size_t self) {
    const Tensor& g = t.out_grad(self);
    if (t.needs_grad(a.id)) {
      Tensor& da = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < split; ++i) da[i] += g[i];
    }
    if (t.needs_grad(b.id)) {
      Tensor& db = t.grad_buffer(b.id);
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[split + i];
    }
  });
}

Var dropout(Var x, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ContractError("dropout: probability must be below 1");
  Tensor mask(x.value().shape());
  std::bernoulli_distribution keep(1.0 - p);
  const double s = 1.0 / (1.0 - p);
  for (double& m : mask.data()) m = keep(rng) ? s : 0.0;
  return mul(x, x.tape->constant(std::move(mask)));
}

}  // namespace ops

std::vector<double> log_softmax_row(std::span<const double> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) out[j] = logits[j] - lse;
  return out;
}

}  // namespace slm
