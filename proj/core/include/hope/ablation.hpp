#pragma once

#include "hope/dataset.hpp"
#include "hope/lifters.hpp"
#include "hope/optim.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hope {

enum class AblationSuite { architecture, pooling, adjacency_init };

std::string to_string(AblationSuite suite);
AblationSuite parse_ablation_suite(const std::string& name);

// architecture: fully_connected, adaptive_gcn, adaptive_graph_unet
// pooling:      gpool, fixed, trainable
// adjacency_init: zeros, random, ones, skeleton, identity
std::vector<std::string> ablation_variants(AblationSuite suite);

/// Shared budget for every variant of a suite. Widths are smaller than the
/// full model's so that many seeds fit on one core.
struct AblationConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 8;
  OptimizerConfig optimizer{OptimizerKind::adam, {1e-3, 1.0, 1}};
  std::vector<std::size_t> unet_features{16, 32, 64, 128};
  std::size_t hidden = 128; // fully connected and plain GCN widths
  double noise_sigma = 10.0;
  double holdout_fraction = 0.2; // tail of the dataset, evaluated without noise
  unsigned jobs = 1;

  void validate() const;
};

std::unique_ptr<Lifter> make_ablation_lifter(AblationSuite suite, const std::string& variant,
                                             const AblationConfig& config, std::uint64_t seed);

struct AblationRun {
  std::string variant;
  std::uint64_t seed = 0;
  double initial_error_mm = 0.0;
  double final_error_mm = 0.0; // holdout, after rollback if the run diverged
  double train_error_mm = 0.0; // final error on the noiseless training split
  bool diverged = false;
  bool frozen = false; // every gradient was exactly zero on every step
  std::size_t steps = 0;
  std::size_t steps_with_pool_grads = 0;
  bool has_pooling_params = false;
};

struct AblationRow {
  std::string variant;
  double mean_error_mm = 0.0;
  double std_over_seeds = 0.0; // sample standard deviation, 0 for one seed
  std::size_t diverged_runs = 0;
  bool frozen = false; // every seed frozen
};

struct AblationResult {
  AblationSuite suite = AblationSuite::architecture;
  std::vector<AblationRun> runs; // variant-major, seeds in the given order
  std::vector<AblationRow> table;
};

// Trains one variant on `train` and evaluates the mean 3D error on `holdout`
// (and, without noise, on `train`).
AblationRun run_ablation_variant(AblationSuite suite, const std::string& variant, std::span<const SampleRecord> train,
                                 std::span<const SampleRecord> holdout, std::uint64_t seed,
                                 const AblationConfig& config);

AblationResult run_ablation(AblationSuite suite, std::span<const SampleRecord> dataset,
                            std::span<const std::uint64_t> seeds, const AblationConfig& config = {});

// variant,mean_error_mm,std_over_seeds,status  (status: ok, frozen or diverged:<runs>)
void write_ablation_table(std::ostream& out, const AblationResult& result);
// variant,seed,initial_error_mm,final_error_mm,train_error_mm,diverged,frozen
void write_ablation_runs(std::ostream& out, const AblationResult& result);

} // namespace hope
