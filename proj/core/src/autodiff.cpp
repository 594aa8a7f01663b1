#include "hope/autodiff.hpp"

#include "eigen_views.hpp"
#include "hope/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hope {

using detail::block_view;
using detail::view;

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Tensor value) {
  if (value.rank() == 1) value.reshape({1, value.size()});
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Tensor& param) {
  if (!param.requires_grad()) throw UsageError("tape parameter does not require grad");
  if (param.rank() != 2) throw DimensionError("tape parameter must be a matrix, got " + param.shape_string());
  nodes_.push_back(Node{{}, {}, {}, &param, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, bool needs_grad, BackwardFn backward) {
  value.check_finite("forward pass");
  nodes_.push_back(Node{std::move(value), {}, needs_grad ? std::move(backward) : BackwardFn{}, nullptr,
                        needs_grad});
  return Var(this, nodes_.size() - 1);
}

Tensor* Tape::grad_buffer(Var v) {
  Node& node = nodes_[v.id_];
  if (!node.needs_grad) return nullptr;
  if (!node.grad.same_shape(node.get())) node.grad = Tensor(node.get().shape());
  return &node.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw UsageError("backward: variable belongs to another tape");
  Node& root = nodes_[loss.id_];
  if (root.get().size() != 1) {
    throw UsageError("backward: loss must be a single element, got " + root.get().shape_string());
  }
  if (!root.needs_grad) return;
  root.grad = Tensor(root.get().shape(), 1.0);

  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.needs_grad || !node.grad.same_shape(node.get())) continue;
    node.grad.check_finite("backward pass");
    if (node.backward) node.backward(*this, node.grad);
    if (node.param != nullptr) {
      auto dst = node.param->grad();
      auto src = node.grad.data();
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
    }
  }
}

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw DimensionError(message);
}

std::string shapes(Var a, Var b) { return a.value().shape_string() + " and " + b.value().shape_string(); }

bool either(Var a, Var b) { return a.tape().needs_grad(a) || b.tape().needs_grad(b); }

void check_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw UsageError("operands recorded on different tapes");
}

} // namespace

Var matmul(Var a, Var b) {
  check_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.cols() == bv.rows(), "matmul: inner dimensions differ for " + shapes(a, b));
  Tensor out = Tensor::zeros(av.rows(), bv.cols());
  view(out).noalias() = view(av) * view(bv);
  return a.tape().record(std::move(out), either(a, b), [a, b](Tape& tape, const Tensor& up) {
    if (Tensor* ga = tape.grad_buffer(a)) view(*ga).noalias() += view(up) * view(tape.value(b)).transpose();
    if (Tensor* gb = tape.grad_buffer(b)) view(*gb).noalias() += view(tape.value(a)).transpose() * view(up);
  });
}

Var relu(Var x) {
  const Tensor& xv = x.value();
  Tensor out = Tensor::zeros(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return x.tape().record(std::move(out), x.tape().needs_grad(x), [x](Tape& tape, const Tensor& up) {
    Tensor* gx = tape.grad_buffer(x);
    const Tensor& xv = tape.value(x);
    for (std::size_t i = 0; i < up.size(); ++i) {
      if (xv[i] > 0.0) (*gx)[i] += up[i];
    }
  });
}

Var sigmoid(Var x) {
  const Tensor& xv = x.value();
  Tensor out = Tensor::zeros(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-xv[i]));
  Tensor saved = out;
  return x.tape().record(std::move(out), x.tape().needs_grad(x),
                         [x, saved = std::move(saved)](Tape& tape, const Tensor& up) {
                           Tensor* gx = tape.grad_buffer(x);
                           for (std::size_t i = 0; i < up.size(); ++i) {
                             (*gx)[i] += up[i] * saved[i] * (1.0 - saved[i]);
                           }
                         });
}

Var concat_features(Var a, Var b) {
  check_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.rows() == bv.rows(), "concat_features: node counts differ for " + shapes(a, b));
  const std::size_t n = av.rows();
  const std::size_t p = av.cols();
  const std::size_t q = bv.cols();
  Tensor out = Tensor::zeros(n, p + q);
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(av.data().data() + r * p, p, out.data().data() + r * (p + q));
    std::copy_n(bv.data().data() + r * q, q, out.data().data() + r * (p + q) + p);
  }
  return a.tape().record(std::move(out), either(a, b), [a, b, n, p, q](Tape& tape, const Tensor& up) {
    Tensor* ga = tape.grad_buffer(a);
    Tensor* gb = tape.grad_buffer(b);
    for (std::size_t r = 0; r < n; ++r) {
      const double* row = up.data().data() + r * (p + q);
      if (ga) {
        for (std::size_t c = 0; c < p; ++c) (*ga)(r, c) += row[c];
      }
      if (gb) {
        for (std::size_t c = 0; c < q; ++c) (*gb)(r, c) += row[p + c];
      }
    }
  });
}

Var mse(Var pred, Var target) {
  check_same_tape(pred, target);
  const Tensor& pv = pred.value();
  const Tensor& tv = target.value();
  require(pv.rows() == tv.rows() && pv.cols() == tv.cols(), "mse: shapes differ for " + shapes(pred, target));
  require(pv.size() > 0, "mse: empty operands");
  const double count = static_cast<double>(pv.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double d = pv[i] - tv[i];
    sum += d * d;
  }
  Tensor out = Tensor::filled(1, 1, sum / count);
  return pred.tape().record(std::move(out), either(pred, target),
                            [pred, target, count](Tape& tape, const Tensor& up) {
                              const Tensor& pv = tape.value(pred);
                              const Tensor& tv = tape.value(target);
                              const double k = 2.0 * up[0] / count;
                              Tensor* gp = tape.grad_buffer(pred);
                              Tensor* gt = tape.grad_buffer(target);
                              for (std::size_t i = 0; i < pv.size(); ++i) {
                                const double g = k * (pv[i] - tv[i]);
                                if (gp) (*gp)[i] += g;
                                if (gt) (*gt)[i] -= g;
                              }
                            });
}

Var add(Var a, Var b) {
  check_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.rows() == bv.rows() && av.cols() == bv.cols(), "add: shapes differ for " + shapes(a, b));
  Tensor out = Tensor::zeros(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  return a.tape().record(std::move(out), either(a, b), [a, b](Tape& tape, const Tensor& up) {
    for (Var v : {a, b}) {
      if (Tensor* g = tape.grad_buffer(v)) {
        for (std::size_t i = 0; i < up.size(); ++i) (*g)[i] += up[i];
      }
    }
  });
}

Var scale(Var a, double factor) {
  const Tensor& av = a.value();
  Tensor out = Tensor::zeros(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = factor * av[i];
  return a.tape().record(std::move(out), a.tape().needs_grad(a), [a, factor](Tape& tape, const Tensor& up) {
    Tensor* g = tape.grad_buffer(a);
    for (std::size_t i = 0; i < up.size(); ++i) (*g)[i] += factor * up[i];
  });
}

Var hadamard(Var a, Var b) {
  check_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.rows() == bv.rows() && av.cols() == bv.cols(), "hadamard: shapes differ for " + shapes(a, b));
  Tensor out = Tensor::zeros(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape().record(std::move(out), either(a, b), [a, b](Tape& tape, const Tensor& up) {
    const Tensor& av = tape.value(a);
    const Tensor& bv = tape.value(b);
    if (Tensor* ga = tape.grad_buffer(a)) {
      for (std::size_t i = 0; i < up.size(); ++i) (*ga)[i] += up[i] * bv[i];
    }
    if (Tensor* gb = tape.grad_buffer(b)) {
      for (std::size_t i = 0; i < up.size(); ++i) (*gb)[i] += up[i] * av[i];
    }
  });
}

Var add_row(Var a, Var bias) {
  check_same_tape(a, bias);
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  require(bv.rows() == 1 && bv.cols() == av.cols(), "add_row: bias shape mismatch for " + shapes(a, bias));
  Tensor out({av.rows(), av.cols()}, std::vector<double>(av.data().begin(), av.data().end()));
  view(out).rowwise() += view(bv).row(0);
  return a.tape().record(std::move(out), either(a, bias), [a, bias](Tape& tape, const Tensor& up) {
    if (Tensor* ga = tape.grad_buffer(a)) view(*ga) += view(up);
    if (Tensor* gb = tape.grad_buffer(bias)) view(*gb) += view(up).colwise().sum();
  });
}

Var node_mix(Var mix, Var x) {
  check_same_tape(mix, x);
  const Tensor& mv = mix.value();
  const Tensor& xv = x.value();
  const std::size_t n_out = mv.rows();
  const std::size_t n_in = mv.cols();
  require(n_in > 0 && xv.rows() % n_in == 0 && xv.rows() > 0,
          "node_mix: feature rows are not a whole number of node blocks for " + shapes(mix, x));
  const std::size_t blocks = xv.rows() / n_in;
  Tensor out = Tensor::zeros(blocks * n_out, xv.cols());
  for (std::size_t b = 0; b < blocks; ++b) {
    block_view(out, b * n_out, n_out).noalias() = view(mv) * block_view(xv, b * n_in, n_in);
  }
  return mix.tape().record(std::move(out), either(mix, x),
                           [mix, x, blocks, n_in, n_out](Tape& tape, const Tensor& up) {
                             const Tensor& mv = tape.value(mix);
                             const Tensor& xv = tape.value(x);
                             Tensor* gm = tape.grad_buffer(mix);
                             Tensor* gx = tape.grad_buffer(x);
                             for (std::size_t b = 0; b < blocks; ++b) {
                               auto up_b = block_view(up, b * n_out, n_out);
                               if (gx) block_view(*gx, b * n_in, n_in).noalias() += view(mv).transpose() * up_b;
                               if (gm) view(*gm).noalias() += up_b * block_view(xv, b * n_in, n_in).transpose();
                             }
                           });
}

Var broadcast_rows(Var v, std::size_t times) {
  const Tensor& vv = v.value();
  const std::size_t rows = vv.rows();
  const std::size_t cols = vv.cols();
  Tensor out = Tensor::zeros(rows * times, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < times; ++t) {
      std::copy_n(vv.data().data() + r * cols, cols, out.data().data() + (r * times + t) * cols);
    }
  }
  return v.tape().record(std::move(out), v.tape().needs_grad(v), [v, rows, cols, times](Tape& tape, const Tensor& up) {
    Tensor* g = tape.grad_buffer(v);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t t = 0; t < times; ++t) {
        const double* src = up.data().data() + (r * times + t) * cols;
        for (std::size_t c = 0; c < cols; ++c) (*g)(r, c) += src[c];
      }
    }
  });
}

Var row_slice(Var x, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  require(begin <= end && end <= xv.rows(), "row_slice: range outside " + xv.shape_string());
  const std::size_t cols = xv.cols();
  Tensor out = Tensor::zeros(end - begin, cols);
  std::copy_n(xv.data().data() + begin * cols, (end - begin) * cols, out.data().data());
  return x.tape().record(std::move(out), x.tape().needs_grad(x), [x, begin, cols](Tape& tape, const Tensor& up) {
    Tensor* g = tape.grad_buffer(x);
    double* dst = g->data().data() + begin * cols;
    for (std::size_t i = 0; i < up.size(); ++i) dst[i] += up[i];
  });
}

Var reshape(Var x, std::size_t rows, std::size_t cols) {
  const Tensor& xv = x.value();
  require(rows * cols == xv.size(), "reshape: element count mismatch for " + xv.shape_string());
  Tensor out({rows, cols}, std::vector<double>(xv.data().begin(), xv.data().end()));
  return x.tape().record(std::move(out), x.tape().needs_grad(x), [x](Tape& tape, const Tensor& up) {
    Tensor* g = tape.grad_buffer(x);
    for (std::size_t i = 0; i < up.size(); ++i) (*g)[i] += up[i];
  });
}

} // namespace hope
