#pragma once

#include "hope/autodiff.hpp"
#include "hope/random.hpp"
#include "hope/tensor.hpp"

#include <string>
#include <vector>

namespace hope {

enum class Activation { relu, linear };

/// Graph convolution Y = act(A X W) whose kernel A is itself trained.
///
/// A is used exactly as stored (no renormalization, may become signed).
/// Inputs are stacks of node blocks: (B*n) x in_features for a batch of B graphs.
class AdaptiveGraphConv {
public:
  AdaptiveGraphConv(Tensor adjacency, std::size_t in_features, std::size_t out_features, Activation activation,
                    Rng& rng);
  AdaptiveGraphConv(Tensor adjacency, Tensor weights, Activation activation);

  Var forward(Tape& tape, Var x);

  // act(A * xw) for an already transformed xw = X W.
  Var aggregate(Tape& tape, Var xw);

  std::size_t nodes() const { return adjacency_.rows(); }
  std::size_t in_features() const { return weights_.rows(); }
  std::size_t out_features() const { return weights_.cols(); }
  Activation activation() const { return activation_; }

  Tensor& adjacency() { return adjacency_; }
  const Tensor& adjacency() const { return adjacency_; }
  Tensor& weights() { return weights_; }
  const Tensor& weights() const { return weights_; }

  void collect_parameters(const std::string& prefix, std::vector<NamedParam>& out);

private:
  Tensor adjacency_;
  Tensor weights_;
  Activation activation_;
};

/// Trainable pooling X' = P X with P of shape n_out x n_in, n_out < n_in.
/// Acts on the node axis, i.e. a dense layer over the transposed features.
class GraphPool {
public:
  GraphPool(std::size_t n_in, std::size_t n_out, Rng& rng);
  explicit GraphPool(Tensor matrix);

  Var forward(Tape& tape, Var x);

  std::size_t n_in() const { return matrix_.cols(); }
  std::size_t n_out() const { return matrix_.rows(); }
  Tensor& matrix() { return matrix_; }
  const Tensor& matrix() const { return matrix_; }
  void collect_parameters(const std::string& prefix, std::vector<NamedParam>& out);

private:
  Tensor matrix_;
};

/// Trainable unpooling X' = U X with U of shape n_out x n_in, n_out > n_in.
class GraphUnpool {
public:
  GraphUnpool(std::size_t n_in, std::size_t n_out, Rng& rng);
  explicit GraphUnpool(Tensor matrix);

  Var forward(Tape& tape, Var x);

  std::size_t n_in() const { return matrix_.cols(); }
  std::size_t n_out() const { return matrix_.rows(); }
  Tensor& matrix() { return matrix_; }
  const Tensor& matrix() const { return matrix_; }
  void collect_parameters(const std::string& prefix, std::vector<NamedParam>& out);

private:
  Tensor matrix_;
};

// ---- gPool baseline --------------------------------------------------------

struct GPoolOutput {
  Var features;
  // Per graph in the batch: kept node indices, highest score first, ties by
  // lower index.
  std::vector<std::vector<std::size_t>> selected;
};

// ceil(ratio * n); ratio must lie strictly inside (0, 1).
std::size_t gpool_keep_count(std::size_t n, double ratio);

/// Top-k pooling with sigmoid gating: scores y = X p / |p|, keep the `keep`
/// highest-scoring nodes of each block and scale them by sigmoid(y).
GPoolOutput gpool_forward(Var x, Var projection, std::size_t nodes_per_block, std::size_t keep);
GPoolOutput gpool_forward(Var x, Var projection, double ratio);

// Scatters kept rows back to their original positions; other rows are zero.
Var gunpool_forward(Var x, const std::vector<std::vector<std::size_t>>& selected, std::size_t n_out);

class GPoolLayer {
public:
  GPoolLayer(std::size_t n_in, std::size_t keep, std::size_t features, Rng& rng);

  GPoolOutput forward(Tape& tape, Var x);

  std::size_t n_in() const { return n_in_; }
  std::size_t n_out() const { return keep_; }
  Tensor& projection() { return projection_; }
  void collect_parameters(const std::string& prefix, std::vector<NamedParam>& out);

private:
  std::size_t n_in_;
  std::size_t keep_;
  Tensor projection_;
};

// ---- fixed pooling baseline ------------------------------------------------

/// Partition of n_in nodes into disjoint, covering groups.
struct NodeGrouping {
  std::size_t n_in = 0;
  std::vector<std::vector<std::size_t>> groups;

  std::size_t n_out() const { return groups.size(); }
  // Throws UsageError unless every node appears in exactly one non-empty group.
  void validate() const;
};

// n_out x n_in; row g averages the members of group g.
Tensor grouping_mean_matrix(const NodeGrouping& grouping);
// n_in x n_out; copies each group's row back to all of its members.
Tensor grouping_broadcast_matrix(const NodeGrouping& grouping);

Var fixed_pool_forward(Var x, const NodeGrouping& grouping);
Var fixed_unpool_forward(Var x, const NodeGrouping& grouping);

} // namespace hope
