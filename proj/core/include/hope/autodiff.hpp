#pragma once

#include "hope/tensor.hpp"

#include <cstddef>
#include <deque>
#include <functional>

namespace hope {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
  Var() = default;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape for one forward pass.
///
/// Nodes are appended in evaluation order, so a reverse sweep visits every
/// node after all of its consumers. Parameter leaves alias a caller-owned
/// Tensor, which must stay unmodified while the tape is alive; backward()
/// adds their gradient into Tensor::grad().
class Tape {
public:
  // Receives the upstream gradient of the node being processed.
  using BackwardFn = std::function<void(Tape&, const Tensor& upstream)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(Tensor& param);

  // Records an op output. `backward` may be empty when no input needs a gradient.
  Var record(Tensor value, bool needs_grad, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_[v.id_].get(); }
  bool needs_grad(Var v) const { return nodes_[v.id_].needs_grad; }

  // Gradient buffer for v, allocated as zeros on first use. Returns nullptr
  // when v does not participate in differentiation.
  Tensor* grad_buffer(Var v);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape once. `loss` must hold a
  // single element.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Tensor* param = nullptr;
    bool needs_grad = false;

    // Parameter leaves read the caller's tensor directly instead of copying it.
    const Tensor& get() const { return param != nullptr ? *param : value; }
  };

  std::deque<Node> nodes_;
};

// ---- differentiable operations -------------------------------------------

// m×k · k×n -> m×n.
Var matmul(Var a, Var b);

// Elementwise max(0, x); gradient gate is zero at x == 0.
Var relu(Var x);

// Elementwise logistic function.
Var sigmoid(Var x);

// Row-wise concatenation [a | b]; row counts must agree.
Var concat_features(Var a, Var b);

// Mean of squared differences, returned as a 1×1 tensor.
Var mse(Var pred, Var target);

Var add(Var a, Var b);
Var scale(Var a, double factor);
// Elementwise product; shapes must agree.
Var hadamard(Var a, Var b);

// a (R×C) plus the 1×C row `bias` on every row.
Var add_row(Var a, Var bias);

// Applies the n_out×n_in matrix `mix` to each consecutive n_in-row block of x,
// producing consecutive n_out-row blocks. With a single block this is matmul.
Var node_mix(Var mix, Var x);

// Repeats each row of v `times` times: (B×p) -> (B·times × p).
Var broadcast_rows(Var v, std::size_t times);

// Rows [begin, end) of x.
Var row_slice(Var x, std::size_t begin, std::size_t end);

// Same buffer viewed as rows×cols.
Var reshape(Var x, std::size_t rows, std::size_t cols);

} // namespace hope
