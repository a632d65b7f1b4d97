#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "slm/tensor.hpp"

namespace slm {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
// tape that produced it is alive.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so the node
// vector is already topologically sorted; backward() walks it once in reverse.
//
// A tape built with grad_enabled=false records values only. That mode is used
// for scoring, where no closures or gradient buffers are needed.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var constant(Tensor t);
  Var leaf(Tensor t);
  // Binds an externally owned tensor without copying it. The tensor must
  // outlive the tape.
  Var param(const Tensor& t);

  const Tensor& value(Var v) const;
  const Tensor& value(std::size_t id) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  // Gradient of the last backward() loss with respect to v; zeros of v's
  // shape when v received none.
  Tensor grad(Var v) const;

  void backward(Var loss);

  // Op-construction interface.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn fn);
  const Tensor& out_grad(std::size_t self) const { return nodes_[self].grad; }
  Tensor& grad_buffer(std::size_t id);
  bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  bool grad_enabled_;
  std::vector<Node> nodes_;
};

// Differentiable primitives. Matrices are rank-2 tensors; vectors rank-1.
namespace ops {

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T
Var add(Var a, Var b);
Var add_bias(Var x, Var bias);  // bias broadcast over rows
Var mul(Var a, Var b);          // elementwise
Var scale(Var a, double s);
Var sum(Var a);
Var gelu(Var a);
Var masked_softmax(Var scores, const BoolMatrix& allow);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
Var cross_entropy(Var logits, std::span<const int> targets);
Var embedding(Var table, std::span<const int> indices);
Var select_rows(Var x, std::span<const std::size_t> rows);
Var slice_cols(Var x, std::size_t start, std::size_t count);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(Var a, Var b);
Var dropout(Var x, double p, std::mt19937_64& rng);

}  // namespace ops

// Value-only helpers shared by scoring code paths.
std::vector<double> log_softmax_row(std::span<const double> logits);

}  // namespace slm
