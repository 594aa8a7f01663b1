#pragma once

#include "hope/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hope {

/// Step-decay learning rate: initial_lr * decay_factor^floor(step / decay_every).
struct SgdSchedule {
  double initial_lr = 1e-3;
  double decay_factor = 1.0;
  std::int64_t decay_every = 1;

  double lr(std::int64_t step) const;
  void validate() const;
};

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  SgdSchedule schedule;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// param <- param - lr(step) * grad for every tensor, then zeroes the gradients.
// Throws UsageError if a tensor carries no gradient buffer.
void sgd_step(std::span<const NamedParam> params, const SgdSchedule& schedule, std::int64_t step);

/// Plain SGD or Adam over a fixed parameter list. Adam moments are kept per
/// tensor in the order the list was given.
class Optimizer {
public:
  Optimizer(OptimizerConfig config, std::vector<NamedParam> params);

  // Applies one update using the learning rate for `schedule_step` and zeroes grads.
  void step(std::int64_t schedule_step);

  const OptimizerConfig& config() const { return config_; }
  const std::vector<NamedParam>& params() const { return params_; }
  std::int64_t updates() const { return updates_; }

private:
  OptimizerConfig config_;
  std::vector<NamedParam> params_;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
  std::int64_t updates_ = 0;
};

} // namespace hope
