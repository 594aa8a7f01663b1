#pragma once

#include "hope/dataset.hpp"
#include "hope/lifters.hpp"
#include "hope/optim.hpp"
#include "hope/pipeline.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hope {

struct StageConfig {
  std::size_t epochs = 0;
  // Stepped once per epoch of the stage.
  SgdSchedule schedule;
};

struct TrainConfig {
  std::string preset = "desk";
  StageConfig stage1;
  StageConfig stage2;
  StageConfig stage3;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::size_t batch_size = 32;
  double noise_sigma = 10.0; // on ground-truth 2D inputs during stage 2
  HopeLossWeights weights;
  std::uint64_t seed = 0;

  // 50 / 200 / 50 epochs with the full-length decay intervals scaled to match.
  static TrainConfig desk();
  // 5000 / 10000 / 5000 epochs; x0.9 every 100 (stages 1, 3), x0.1 every 4000 (stage 2).
  static TrainConfig paper();
  static TrainConfig from_preset(const std::string& name);

  void validate() const;
  std::string to_json() const;
  // Starts from the named preset (key "preset", default desk) and applies
  // the remaining keys. Unknown keys are rejected.
  static TrainConfig from_json(const std::string& text);
};

// One row per epoch. Loss columns a stage does not compute are NaN.
struct LogRow {
  std::int64_t step = 0; // epoch counter across all stages
  int stage = 0;
  double lr = 0.0;
  double loss_init2d = std::numeric_limits<double>::quiet_NaN();
  double loss_2d = std::numeric_limits<double>::quiet_NaN();
  double loss_3d = std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
};

using EpochCallback = std::function<void(const LogRow&)>;

// Columns step,stage,lr,loss_init2d,loss_2d,loss_3d,total; NaN cells are empty.
void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const LogRow& row);

/// Three-stage schedule: (1) encoder + 2D refinement on the two 2D terms,
/// (2) the U-Net alone on noisy ground-truth 2D -> 3D, (3) everything on the
/// full weighted loss.
///
/// On a non-finite value the parameters are rolled back to the start of the
/// failing epoch and DivergenceError is thrown.
std::vector<LogRow> train(HopePipeline& pipeline, std::span<const SampleRecord> data, const TrainConfig& config,
                          const EpochCallback& on_epoch = {});

struct LifterTrainConfig {
  std::size_t epochs = 20;
  OptimizerConfig optimizer{OptimizerKind::adam, {1e-3, 1.0, 1}};
  std::size_t batch_size = 32;
  double noise_sigma = 10.0;
  std::uint64_t seed = 0;
};

struct LifterTrainStats {
  std::vector<double> epoch_loss; // mean 3D MSE per epoch
  std::size_t steps = 0;
  // True while every parameter gradient has been exactly zero on every step.
  bool all_grads_zero = true;
  // Steps on which every pooling tensor received a nonzero gradient.
  std::size_t steps_with_pool_grads = 0;
  double min_pool_grad_norm = std::numeric_limits<double>::infinity();
  bool diverged = false;
  std::string divergence;
};

/// Stage-2 style training of a bare lifter (noisy ground-truth 2D -> 3D).
/// A divergent run is rolled back to its last good epoch and reported
/// through the stats instead of throwing.
LifterTrainStats train_lifter(Lifter& lifter, std::span<const SampleRecord> data, const LifterTrainConfig& config);

// Lifter outputs, one 29 x 3 tensor per record. Inputs are the ground-truth
// 2D points, with N(0, sigma^2) noise when sigma > 0.
std::vector<Tensor> lift_records(Lifter& lifter, std::span<const SampleRecord> data, double noise_sigma = 0.0,
                                 std::uint64_t noise_seed = 0, std::size_t batch_size = 64);

// Mean per-keypoint 3D error (mm) of lift_records against ground truth.
double evaluate_lifter(Lifter& lifter, std::span<const SampleRecord> data, double noise_sigma = 0.0,
                       std::uint64_t noise_seed = 0);

} // namespace hope
