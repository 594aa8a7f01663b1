#include "hope/pipeline.hpp"

#include "hope/errors.hpp"
#include "hope/keypoints.hpp"
#include "hope/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hope {

namespace {

constexpr std::size_t kRasterCells = kRasterSide * kRasterSide;

Tensor trainable(Tensor t) {
  t.set_requires_grad(true);
  return t;
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t salt) { return derive_seed(seed, {salt}); }

} // namespace

void HopeLossWeights::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw UsageError("loss weights must be non-negative");
}

// ---- StubEncoder ---------------------------------------------------------------

StubEncoder::StubEncoder(std::uint64_t seed) {
  Rng rng(seed);
  feature_weights_ = trainable(init_uniform_fan_in(kRasterCells, kImageFeatures, kRasterCells, rng));
  feature_bias_ = trainable(init_uniform_fan_in(1, kImageFeatures, kRasterCells, rng));
  head_weights_ = trainable(init_uniform_fan_in(kImageFeatures, 2 * keypoints::kNodes, kImageFeatures, rng));
  head_bias_ = trainable(init_uniform_fan_in(1, 2 * keypoints::kNodes, kImageFeatures, rng));
}

Tensor StubEncoder::rasterize(const SampleRecord& record) {
  if (record.gt2d.rows() != keypoints::kNodes || record.gt2d.cols() != 2) {
    throw DimensionError("rasterize: sample '" + record.id + "' has no 29 x 2 ground truth");
  }
  Tensor grid = Tensor::zeros(1, kRasterCells);
  const double width = 2.0 * record.camera.cx;
  const double height = 2.0 * record.camera.cy;
  const auto side = static_cast<double>(kRasterSide);
  for (std::size_t k = 0; k < keypoints::kNodes; ++k) {
    const double u = std::clamp(std::floor(record.gt2d(k, 0) / width * side), 0.0, side - 1.0);
    const double v = std::clamp(std::floor(record.gt2d(k, 1) / height * side), 0.0, side - 1.0);
    grid[static_cast<std::size_t>(v) * kRasterSide + static_cast<std::size_t>(u)] += 1.0;
  }
  return grid;
}

FeatureProvider::Output StubEncoder::encode(Tape& tape, std::span<const SampleRecord> records,
                                            std::span<const std::size_t> indices) {
  const std::size_t batch = indices.size();
  if (batch == 0) throw UsageError("encode: empty batch");
  Tensor rasters = Tensor::zeros(batch, kRasterCells);
  Tensor offset = Tensor::zeros(batch * keypoints::kNodes, 2);
  Tensor unit = Tensor::zeros(batch * keypoints::kNodes, 2);
  for (std::size_t b = 0; b < batch; ++b) {
    const SampleRecord& rec = records[indices[b]];
    const Tensor grid = rasterize(rec);
    std::copy(grid.data().begin(), grid.data().end(), rasters.data().begin() + b * kRasterCells);
    for (std::size_t k = 0; k < keypoints::kNodes; ++k) {
      offset(b * keypoints::kNodes + k, 0) = rec.camera.cx;
      offset(b * keypoints::kNodes + k, 1) = rec.camera.cy;
      unit(b * keypoints::kNodes + k, 0) = rec.camera.cx;
      unit(b * keypoints::kNodes + k, 1) = rec.camera.cy;
    }
  }
  const Var raster = tape.constant(std::move(rasters));
  const Var features =
      add_row(matmul(raster, tape.parameter(feature_weights_)), tape.parameter(feature_bias_));
  const Var head = add_row(matmul(features, tape.parameter(head_weights_)), tape.parameter(head_bias_));
  const Var normalized = reshape(head, batch * keypoints::kNodes, 2);

  // init2d = principal point + (cx, cy) * head output, elementwise.
  const Var init2d = add(tape.constant(std::move(offset)), hadamard(normalized, tape.constant(std::move(unit))));
  return {features, init2d};
}

std::vector<NamedParam> StubEncoder::parameters() {
  return {{"encoder.feature_weights", &feature_weights_},
          {"encoder.feature_bias", &feature_bias_},
          {"encoder.head_weights", &head_weights_},
          {"encoder.head_bias", &head_bias_}};
}

// ---- RefineNet -----------------------------------------------------------------

RefineNet::RefineNet(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = keypoints::kNodes;
  layers_.reserve(3);
  layers_.emplace_back(Tensor::identity(n), kRefineInputFeatures, 512, Activation::relu, rng);
  layers_.emplace_back(Tensor::identity(n), 512, 128, Activation::relu, rng);
  layers_.emplace_back(Tensor::identity(n), 128, 2, Activation::linear, rng);
}

Var RefineNet::forward(Tape& tape, Var features, Var init2d) {
  const std::size_t n = keypoints::kNodes;
  if (features.cols() != kImageFeatures) throw DimensionError("refine: expected 2048 image features");
  if (init2d.cols() != 2 || init2d.rows() != features.rows() * n) {
    throw DimensionError("refine: initial 2D must be (B*29) x 2, got " + init2d.value().shape_string());
  }
  const Var shift = tape.constant(Tensor::filled(init2d.rows(), 2, -kPixelCenter));
  const Var coords = scale(add(init2d, shift), 1.0 / kPixelScale);
  AdaptiveGraphConv& first = layers_[0];
  const Var w = tape.parameter(first.weights());
  const Var image_part = broadcast_rows(matmul(features, row_slice(w, 0, kImageFeatures)), n);
  const Var coord_part = matmul(coords, row_slice(w, kImageFeatures, kRefineInputFeatures));
  Var h = first.aggregate(tape, add(image_part, coord_part));
  h = layers_[1].forward(tape, h);
  const Var out = scale(layers_[2].forward(tape, h), kPixelScale);
  return add(out, tape.constant(Tensor::filled(out.rows(), 2, kPixelCenter)));
}

std::vector<AdaptiveGraphConv*> RefineNet::adaptive_layers() {
  std::vector<AdaptiveGraphConv*> out;
  for (auto& layer : layers_) out.push_back(&layer);
  return out;
}

void RefineNet::collect_parameters(const std::string& prefix, std::vector<NamedParam>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].collect_parameters(prefix + ".conv" + std::to_string(i), out);
  }
}

Var refine_node_features(Var features, Var init2d) {
  return concat_features(broadcast_rows(features, keypoints::kNodes), init2d);
}

// ---- loss ----------------------------------------------------------------------

HopeLoss hope_loss(Var init2d, Var refined2d, Var pred3d, Var gt2d, Var gt3d, const HopeLossWeights& weights) {
  weights.validate();
  HopeLoss loss;
  loss.init2d = mse(init2d, gt2d);
  loss.refined2d = mse(refined2d, gt2d);
  loss.lift3d = mse(pred3d, gt3d);
  loss.total = add(add(scale(loss.init2d, weights.alpha), scale(loss.refined2d, weights.beta)), loss.lift3d);
  return loss;
}

// ---- HopePipeline --------------------------------------------------------------

HopePipeline::HopePipeline(UNetConfig unet_config, std::uint64_t seed)
    : encoder_(sub_seed(seed, 1)), refine_(sub_seed(seed, 2)), unet_(std::move(unet_config), sub_seed(seed, 3)) {}

HopePipeline::Forward HopePipeline::forward(Tape& tape, std::span<const SampleRecord> records,
                                            std::span<const std::size_t> indices) {
  const auto encoded = encoder_.encode(tape, records, indices);
  const Var refined = refine_.forward(tape, encoded.features, encoded.init2d);
  const Var pred3d = unet_.forward(tape, refined);
  return {encoded.init2d, refined, pred3d};
}

std::vector<Prediction> HopePipeline::predict_all(std::span<const SampleRecord> records, std::size_t batch_size) {
  if (batch_size == 0) throw UsageError("predict: batch size must be positive");
  std::vector<Prediction> out;
  out.reserve(records.size());
  const std::size_t n = keypoints::kNodes;
  for (std::size_t begin = 0; begin < records.size(); begin += batch_size) {
    const std::size_t end = std::min(records.size(), begin + batch_size);
    std::vector<std::size_t> indices(end - begin);
    std::iota(indices.begin(), indices.end(), begin);
    Tape tape;
    const Forward f = forward(tape, records, indices);
    const Tensor& r2 = f.refined2d.value();
    const Tensor& p3 = f.pred3d.value();
    for (std::size_t b = 0; b < indices.size(); ++b) {
      Prediction p{Tensor::zeros(n, 2), Tensor::zeros(n, 3)};
      std::copy_n(r2.data().begin() + b * n * 2, n * 2, p.refined2d.data().begin());
      std::copy_n(p3.data().begin() + b * n * 3, n * 3, p.pred3d.data().begin());
      out.push_back(std::move(p));
    }
  }
  return out;
}

Prediction HopePipeline::predict(const SampleRecord& record) {
  return predict_all(std::span<const SampleRecord>(&record, 1), 1).front();
}

std::vector<NamedParam> HopePipeline::parameters() {
  std::vector<NamedParam> out = encoder_.parameters();
  refine_.collect_parameters("refine", out);
  for (const NamedParam& p : unet_.parameters()) out.push_back(p);
  return out;
}

std::vector<AdaptiveGraphConv*> HopePipeline::adaptive_layers() {
  std::vector<AdaptiveGraphConv*> out = refine_.adaptive_layers();
  for (AdaptiveGraphConv* layer : unet_.adaptive_layers()) out.push_back(layer);
  return out;
}

} // namespace hope
