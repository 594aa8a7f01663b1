#include "hope/graph_layers.hpp"

#include "hope/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hope {

namespace {

Tensor as_param(Tensor t) {
  t.set_requires_grad(true);
  return t;
}

void require_square(const Tensor& a, const char* what) {
  if (a.rank() != 2 || a.rows() != a.cols() || a.rows() == 0) {
    throw DimensionError(std::string(what) + ": adjacency must be a non-empty square matrix, got " + a.shape_string());
  }
}

} // namespace

AdaptiveGraphConv::AdaptiveGraphConv(Tensor adjacency, std::size_t in_features, std::size_t out_features,
                                     Activation activation, Rng& rng)
    : AdaptiveGraphConv(std::move(adjacency), init_uniform_fan_in(in_features, out_features, in_features, rng),
                        activation) {}

AdaptiveGraphConv::AdaptiveGraphConv(Tensor adjacency, Tensor weights, Activation activation)
    : adjacency_(as_param(std::move(adjacency))), weights_(as_param(std::move(weights))), activation_(activation) {
  require_square(adjacency_, "AdaptiveGraphConv");
  if (weights_.rank() != 2) throw DimensionError("AdaptiveGraphConv: weights must be a matrix");
}

Var AdaptiveGraphConv::forward(Tape& tape, Var x) {
  if (x.cols() != in_features()) {
    throw DimensionError("AdaptiveGraphConv: input has " + std::to_string(x.cols()) + " features, layer expects " +
                         std::to_string(in_features()));
  }
  if (x.rows() % nodes() != 0) {
    throw DimensionError("AdaptiveGraphConv: input rows " + std::to_string(x.rows()) + " are not a multiple of " +
                         std::to_string(nodes()) + " nodes");
  }
  const Var a = tape.parameter(adjacency_);
  const Var w = tape.parameter(weights_);
  // Same product either way; mix nodes on whichever side is narrower.
  Var y = in_features() < out_features() ? matmul(node_mix(a, x), w) : node_mix(a, matmul(x, w));
  return activation_ == Activation::relu ? relu(y) : y;
}

Var AdaptiveGraphConv::aggregate(Tape& tape, Var xw) {
  if (xw.cols() != out_features()) throw DimensionError("AdaptiveGraphConv::aggregate: width mismatch");
  Var y = node_mix(tape.parameter(adjacency_), xw);
  return activation_ == Activation::relu ? relu(y) : y;
}

void AdaptiveGraphConv::collect_parameters(const std::string& prefix, std::vector<NamedParam>& out) {
  out.push_back({prefix + ".adjacency", &adjacency_});
  out.push_back({prefix + ".weights", &weights_});
}

GraphPool::GraphPool(std::size_t n_in, std::size_t n_out, Rng& rng)
    : GraphPool(init_uniform_fan_in(n_out, n_in, n_in, rng)) {}

GraphPool::GraphPool(Tensor matrix) : matrix_(as_param(std::move(matrix))) {
  if (matrix_.rank() != 2 || !(matrix_.rows() < matrix_.cols()) || matrix_.rows() == 0) {
    throw DimensionError("GraphPool: need 0 < n_out < n_in, got " + matrix_.shape_string());
  }
}

Var GraphPool::forward(Tape& tape, Var x) {
  if (x.rows() % n_in() != 0) throw DimensionError("GraphPool: input rows are not a multiple of n_in");
  return node_mix(tape.parameter(matrix_), x);
}

void GraphPool::collect_parameters(const std::string& prefix, std::vector<NamedParam>& out) {
  out.push_back({prefix + ".matrix", &matrix_});
}

GraphUnpool::GraphUnpool(std::size_t n_in, std::size_t n_out, Rng& rng)
    : GraphUnpool(init_uniform_fan_in(n_out, n_in, n_in, rng)) {}

GraphUnpool::GraphUnpool(Tensor matrix) : matrix_(as_param(std::move(matrix))) {
  if (matrix_.rank() != 2 || !(matrix_.rows() > matrix_.cols()) || matrix_.cols() == 0) {
    throw DimensionError("GraphUnpool: need n_out > n_in > 0, got " + matrix_.shape_string());
  }
}

Var GraphUnpool::forward(Tape& tape, Var x) {
  if (x.rows() % n_in() != 0) throw DimensionError("GraphUnpool: input rows are not a multiple of n_in");
  return node_mix(tape.parameter(matrix_), x);
}

void GraphUnpool::collect_parameters(const std::string& prefix, std::vector<NamedParam>& out) {
  out.push_back({prefix + ".matrix", &matrix_});
}

// ---- gPool -----------------------------------------------------------------

std::size_t gpool_keep_count(std::size_t n, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("gpool: ratio must lie in (0, 1)");
  return static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n)));
}

GPoolOutput gpool_forward(Var x, Var projection, std::size_t nodes_per_block, std::size_t keep) {
  const Tensor& xv = x.value();
  const Tensor& pv = projection.value();
  const std::size_t k = xv.cols();
  if (pv.size() != k) {
    throw DimensionError("gpool: projection length " + std::to_string(pv.size()) + " differs from feature width " +
                         std::to_string(k));
  }
  if (nodes_per_block == 0 || xv.rows() % nodes_per_block != 0) {
    throw DimensionError("gpool: input rows are not a multiple of the node count");
  }
  if (keep == 0 || keep > nodes_per_block) throw DomainError("gpool: keep count out of range");

  double norm = 0.0;
  for (double v : pv.data()) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw NumericError("gpool: projection vector has zero norm");

  const std::size_t blocks = xv.rows() / nodes_per_block;
  std::vector<double> scores(xv.rows());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += xv(r, c) * pv[c];
    scores[r] = s / norm;
  }

  GPoolOutput result;
  result.selected.resize(blocks);
  Tensor out = Tensor::zeros(blocks * keep, k);
  std::vector<double> gates(blocks * keep);
  for (std::size_t b = 0; b < blocks; ++b) {
    std::vector<std::size_t> order(nodes_per_block);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const double* block_scores = scores.data() + b * nodes_per_block;
    std::stable_sort(order.begin(), order.end(),
                     [block_scores](std::size_t i, std::size_t j) { return block_scores[i] > block_scores[j]; });
    order.resize(keep);
    for (std::size_t r = 0; r < keep; ++r) {
      const std::size_t src = b * nodes_per_block + order[r];
      const double gate = 1.0 / (1.0 + std::exp(-scores[src]));
      gates[b * keep + r] = gate;
      for (std::size_t c = 0; c < k; ++c) out(b * keep + r, c) = xv(src, c) * gate;
    }
    result.selected[b] = std::move(order);
  }

  Tape& tape = x.tape();
  const bool needs = tape.needs_grad(x) || tape.needs_grad(projection);
  result.features = tape.record(
      std::move(out), needs,
      [x, projection, nodes_per_block, keep, norm, gates = std::move(gates),
       selected = result.selected](Tape& tape, const Tensor& up) {
        const Tensor& xv = tape.value(x);
        const Tensor& pv = tape.value(projection);
        const std::size_t k = xv.cols();
        Tensor* gx = tape.grad_buffer(x);
        Tensor* gp = tape.grad_buffer(projection);
        // d/d(unit projection), converted to d/dp at the end.
        std::vector<double> g_unit(k, 0.0);
        for (std::size_t b = 0; b < selected.size(); ++b) {
          for (std::size_t r = 0; r < keep; ++r) {
            const std::size_t row = b * keep + r;
            const std::size_t src = b * nodes_per_block + selected[b][r];
            const double gate = gates[row];
            double dot = 0.0;
            for (std::size_t c = 0; c < k; ++c) dot += up(row, c) * xv(src, c);
            const double d_score = gate * (1.0 - gate) * dot;
            if (gx) {
              for (std::size_t c = 0; c < k; ++c) (*gx)(src, c) += gate * up(row, c) + d_score * pv[c] / norm;
            }
            for (std::size_t c = 0; c < k; ++c) g_unit[c] += d_score * xv(src, c);
          }
        }
        if (gp) {
          double radial = 0.0;
          for (std::size_t c = 0; c < k; ++c) radial += g_unit[c] * pv[c] / norm;
          for (std::size_t c = 0; c < k; ++c) (*gp)[c] += (g_unit[c] - radial * pv[c] / norm) / norm;
        }
      });
  return result;
}

GPoolOutput gpool_forward(Var x, Var projection, double ratio) {
  const std::size_t n = x.rows();
  return gpool_forward(x, projection, n, gpool_keep_count(n, ratio));
}

Var gunpool_forward(Var x, const std::vector<std::vector<std::size_t>>& selected, std::size_t n_out) {
  const Tensor& xv = x.value();
  if (selected.empty()) throw DimensionError("gunpool: no selection recorded");
  const std::size_t keep = selected.front().size();
  if (xv.rows() != selected.size() * keep) throw DimensionError("gunpool: input rows do not match the selection");
  const std::size_t k = xv.cols();
  Tensor out = Tensor::zeros(selected.size() * n_out, k);
  for (std::size_t b = 0; b < selected.size(); ++b) {
    for (std::size_t r = 0; r < keep; ++r) {
      if (selected[b][r] >= n_out) throw DimensionError("gunpool: selected index outside the output graph");
      const std::size_t dst = b * n_out + selected[b][r];
      for (std::size_t c = 0; c < k; ++c) out(dst, c) = xv(b * keep + r, c);
    }
  }
  return x.tape().record(std::move(out), x.tape().needs_grad(x), [x, selected, keep, n_out](Tape& tape, const Tensor& up) {
    Tensor* gx = tape.grad_buffer(x);
    const std::size_t k = up.cols();
    for (std::size_t b = 0; b < selected.size(); ++b) {
      for (std::size_t r = 0; r < keep; ++r) {
        const std::size_t src = b * n_out + selected[b][r];
        for (std::size_t c = 0; c < k; ++c) (*gx)(b * keep + r, c) += up(src, c);
      }
    }
  });
}

GPoolLayer::GPoolLayer(std::size_t n_in, std::size_t keep, std::size_t features, Rng& rng)
    : n_in_(n_in), keep_(keep), projection_(as_param(init_uniform_fan_in(1, features, features, rng))) {
  if (keep == 0 || keep >= n_in) throw DimensionError("GPoolLayer: need 0 < keep < n_in");
}

GPoolOutput GPoolLayer::forward(Tape& tape, Var x) {
  return gpool_forward(x, tape.parameter(projection_), n_in_, keep_);
}

void GPoolLayer::collect_parameters(const std::string& prefix, std::vector<NamedParam>& out) {
  out.push_back({prefix + ".projection", &projection_});
}

// ---- fixed pooling ---------------------------------------------------------

void NodeGrouping::validate() const {
  std::vector<int> seen(n_in, 0);
  for (const auto& g : groups) {
    if (g.empty()) throw UsageError("node grouping: empty group");
    for (std::size_t node : g) {
      if (node >= n_in) throw UsageError("node grouping: node " + std::to_string(node) + " out of range");
      if (seen[node]++) throw UsageError("node grouping: node " + std::to_string(node) + " appears twice");
    }
  }
  for (std::size_t i = 0; i < n_in; ++i) {
    if (!seen[i]) throw UsageError("node grouping: node " + std::to_string(i) + " is not covered");
  }
}

Tensor grouping_mean_matrix(const NodeGrouping& grouping) {
  grouping.validate();
  Tensor m = Tensor::zeros(grouping.n_out(), grouping.n_in);
  for (std::size_t g = 0; g < grouping.n_out(); ++g) {
    const double w = 1.0 / static_cast<double>(grouping.groups[g].size());
    for (std::size_t node : grouping.groups[g]) m(g, node) = w;
  }
  return m;
}

Tensor grouping_broadcast_matrix(const NodeGrouping& grouping) {
  grouping.validate();
  Tensor m = Tensor::zeros(grouping.n_in, grouping.n_out());
  for (std::size_t g = 0; g < grouping.n_out(); ++g) {
    for (std::size_t node : grouping.groups[g]) m(node, g) = 1.0;
  }
  return m;
}

Var fixed_pool_forward(Var x, const NodeGrouping& grouping) {
  return node_mix(x.tape().constant(grouping_mean_matrix(grouping)), x);
}

Var fixed_unpool_forward(Var x, const NodeGrouping& grouping) {
  return node_mix(x.tape().constant(grouping_broadcast_matrix(grouping)), x);
}

} // namespace hope
