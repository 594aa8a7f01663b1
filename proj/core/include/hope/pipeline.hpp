#pragma once

#include "hope/autodiff.hpp"
#include "hope/dataset.hpp"
#include "hope/graph_layers.hpp"
#include "hope/lifters.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hope {

inline constexpr std::size_t kImageFeatures = 2048;
inline constexpr std::size_t kRasterSide = 32;
inline constexpr std::size_t kRefineInputFeatures = kImageFeatures + 2;

struct HopeLossWeights {
  double alpha = 0.1; // initial 2D term
  double beta = 0.1;  // refined 2D term

  void validate() const;
};

/// Source of per-image features and an initial 2D estimate.
class FeatureProvider {
public:
  struct Output {
    Var features; // B x 2048
    Var init2d;   // (B*29) x 2, pixels
  };

  virtual ~FeatureProvider() = default;
  virtual Output encode(Tape& tape, std::span<const SampleRecord> records, std::span<const std::size_t> indices) = 0;
  virtual std::vector<NamedParam> parameters() = 0;
};

/// Stand-in image encoder.
///
/// Rasterizes a sample's ground-truth 2D keypoints onto a 32x32 count grid
/// spanning [0, 2cx) x [0, 2cy) (points outside are clamped to the border),
/// maps the flattened grid affinely to 2048 features, and maps those affinely
/// to 58 numbers read as offsets from the principal point in units of
/// (cx, cy). It keeps the data flow of an image encoder while staying
/// dataset-free.
class StubEncoder final : public FeatureProvider {
public:
  explicit StubEncoder(std::uint64_t seed);

  static Tensor rasterize(const SampleRecord& record);

  Output encode(Tape& tape, std::span<const SampleRecord> records, std::span<const std::size_t> indices) override;
  std::vector<NamedParam> parameters() override;

private:
  Tensor feature_weights_; // 1024 x 2048
  Tensor feature_bias_;    // 1 x 2048
  Tensor head_weights_;    // 2048 x 58
  Tensor head_bias_;       // 1 x 58
};

/// Three adaptive graph convolutions (2050 -> 512 -> 128 -> 2, ReLU, ReLU,
/// linear) over node features [image features | initial x, y].
///
/// Coordinates enter as (px - 320) / 320 and leave as 320 + 320 * output,
/// mirroring the lifters' fixed scaling.
///
/// Every node carries the same image features, so the first layer applies
/// the image block of its weights once per sample and broadcasts the result;
/// this equals convolving the explicit 29 x 2050 node features.
class RefineNet {
public:
  explicit RefineNet(std::uint64_t seed);

  Var forward(Tape& tape, Var features, Var init2d);

  static constexpr double kPixelCenter = 320.0;
  static constexpr double kPixelScale = 320.0;

  std::vector<AdaptiveGraphConv*> adaptive_layers();
  void collect_parameters(const std::string& prefix, std::vector<NamedParam>& out);

private:
  std::vector<AdaptiveGraphConv> layers_;
};

// Explicit (B*29) x 2050 node features: image features broadcast to every
// node, then the (already normalized) initial coordinates appended.
Var refine_node_features(Var features, Var init2d);

struct HopeLoss {
  Var init2d;
  Var refined2d;
  Var lift3d;
  Var total;
};

// alpha * MSE(init2d, gt2d) + beta * MSE(refined2d, gt2d) + MSE(pred3d, gt3d).
HopeLoss hope_loss(Var init2d, Var refined2d, Var pred3d, Var gt2d, Var gt3d, const HopeLossWeights& weights);

struct Prediction {
  Tensor refined2d; // 29 x 2 px
  Tensor pred3d;    // 29 x 3 mm
};

/// Image features -> initial 2D -> refined 2D -> Graph U-Net 3D.
class HopePipeline {
public:
  struct Forward {
    Var init2d;
    Var refined2d;
    Var pred3d;
  };

  HopePipeline(UNetConfig unet_config, std::uint64_t seed);
  HopePipeline(const HopePipeline&) = delete;
  HopePipeline& operator=(const HopePipeline&) = delete;

  Forward forward(Tape& tape, std::span<const SampleRecord> records, std::span<const std::size_t> indices);

  Prediction predict(const SampleRecord& record);
  std::vector<Prediction> predict_all(std::span<const SampleRecord> records, std::size_t batch_size = 64);

  std::vector<NamedParam> parameters();
  // Refinement layers first, then the U-Net's.
  std::vector<AdaptiveGraphConv*> adaptive_layers();

  StubEncoder& encoder() { return encoder_; }
  RefineNet& refine() { return refine_; }
  GraphUNet& unet() { return unet_; }

private:
  StubEncoder encoder_;
  RefineNet refine_;
  GraphUNet unet_;
};

} // namespace hope
