#pragma once

#include "hope/autodiff.hpp"
#include "hope/graph_layers.hpp"
#include "hope/random.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace hope {

/// A 2D -> 3D keypoint lifter: (B*29) x 2 pixel coordinates in,
/// (B*29) x 3 camera-frame millimetres out.
class Lifter {
public:
  virtual ~Lifter() = default;
  virtual Var forward(Tape& tape, Var coords2d) = 0;
  virtual std::vector<NamedParam> parameters() = 0;
  // Node-axis pooling tensors, empty when the lifter has none that train.
  virtual std::vector<NamedParam> pooling_parameters() { return {}; }
  virtual std::string name() const = 0;
};

enum class PoolingKind { trainable, fixed, gpool };
enum class AdjacencyInit { identity, zeros, ones, random, skeleton };

std::string to_string(PoolingKind kind);
std::string to_string(AdjacencyInit init);
PoolingKind parse_pooling_kind(const std::string& name);
AdjacencyInit parse_adjacency_init(const std::string& name);

/// Fixed, untrained affine maps around every lifter: inputs enter as
/// (px - input_center) / input_scale and outputs leave multiplied by
/// output_scale (mm per unit).
struct IoScaling {
  double input_center = 320.0;
  double input_scale = 320.0;
  double output_scale = 100.0;
  // Append a constant 1 to every node's normalized coordinates. The graph
  // layers carry no biases, so without it the network is positively
  // homogeneous in its input and cannot represent affine maps.
  bool constant_channel = true;

  void validate() const;
  std::size_t input_width() const { return constant_channel ? 3 : 2; }
  Var normalize_input(Var coords2d) const;
  Var denormalize_output(Var out) const;
};

struct UNetConfig {
  // Strictly decreasing, starting at 29. The decoder mirrors it.
  std::vector<std::size_t> node_schedule{29, 15, 8, 4};
  // Output width of the convolution at each level (last entry = bottleneck).
  std::vector<std::size_t> feature_schedule{64, 128, 256, 512};
  PoolingKind pooling = PoolingKind::trainable;
  AdjacencyInit adjacency_init = AdjacencyInit::identity;
  IoScaling scaling;

  void validate() const;
  std::string to_json() const;
  static UNetConfig from_json(const std::string& text);
};

// Initial kernel for an adaptive layer over `n` nodes at U-Net `level`
// (0 = full graph). Skeleton initialisation coarsens the hand-object skeleton
// with the default groupings and renormalizes it; the others are used raw.
Tensor initial_adjacency(AdjacencyInit init, std::size_t n, std::size_t level, Rng& rng);

/// Encoder (conv + pool per level), bottleneck conv, decoder (unpool, concat
/// the matching encoder output, conv) and a linear graph-conv head to 3
/// features. Every graph convolution owns its own adaptive kernel.
class GraphUNet final : public Lifter {
public:
  GraphUNet(UNetConfig config, std::uint64_t seed);

  Var forward(Tape& tape, Var coords2d) override;
  std::vector<NamedParam> parameters() override;
  std::vector<NamedParam> pooling_parameters() override;
  std::string name() const override { return "adaptive_graph_unet"; }

  const UNetConfig& config() const { return config_; }
  // Encoder convs, bottleneck, decoder convs (coarse to fine), head.
  std::vector<AdaptiveGraphConv*> adaptive_layers();

private:
  std::size_t levels() const { return config_.node_schedule.size(); }

  UNetConfig config_;
  std::vector<AdaptiveGraphConv> encoder_;
  std::vector<AdaptiveGraphConv> bottleneck_;
  std::vector<AdaptiveGraphConv> decoder_; // decoder_[i] runs at level i
  std::vector<AdaptiveGraphConv> head_;
  std::vector<GraphPool> pools_;
  std::vector<GraphUnpool> unpools_;
  std::vector<GPoolLayer> gpools_;
};

GraphUNet build_default_unet(std::uint64_t seed);

/// Three dense layers on the flattened 58-vector (with biases).
class FullyConnectedLifter final : public Lifter {
public:
  FullyConnectedLifter(std::size_t hidden, std::uint64_t seed, IoScaling scaling = {});

  Var forward(Tape& tape, Var coords2d) override;
  std::vector<NamedParam> parameters() override;
  std::string name() const override { return "fully_connected"; }

private:
  IoScaling scaling_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

/// Three adaptive graph convolutions on the full 29-node graph, no pooling.
class AdaptiveGcnLifter final : public Lifter {
public:
  AdaptiveGcnLifter(std::size_t hidden, AdjacencyInit init, std::uint64_t seed, IoScaling scaling = {});

  Var forward(Tape& tape, Var coords2d) override;
  std::vector<NamedParam> parameters() override;
  std::string name() const override { return "adaptive_gcn"; }

  std::vector<AdaptiveGraphConv*> adaptive_layers();

private:
  IoScaling scaling_;
  std::vector<AdaptiveGraphConv> layers_;
};

// Checks the (B*29) x 2 input contract; returns B.
std::size_t check_lifter_input(const Tensor& coords2d);

} // namespace hope
