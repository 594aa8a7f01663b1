#include "hope/optim.hpp"

#include "hope/errors.hpp"

#include <cmath>

namespace hope {

double SgdSchedule::lr(std::int64_t step) const {
  if (step < 0) throw UsageError("learning-rate schedule queried at a negative step");
  const auto decays = static_cast<double>(step / decay_every);
  return initial_lr * std::pow(decay_factor, decays);
}

void SgdSchedule::validate() const {
  if (!(initial_lr > 0.0) || !std::isfinite(initial_lr)) throw UsageError("initial_lr must be positive");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) throw UsageError("decay_factor must lie in (0, 1]");
  if (decay_every <= 0) throw UsageError("decay_every must be a positive step count");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw UsageError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

namespace {

void require_grads(std::span<const NamedParam> params) {
  for (const auto& p : params) {
    if (!p.tensor->has_grad()) throw UsageError("parameter '" + p.name + "' has no accumulated gradient");
  }
}

} // namespace

void sgd_step(std::span<const NamedParam> params, const SgdSchedule& schedule, std::int64_t step) {
  schedule.validate();
  require_grads(params);
  const double lr = schedule.lr(step);
  for (const auto& p : params) {
    auto data = p.tensor->data();
    auto grad = p.tensor->grad();
    for (std::size_t i = 0; i < data.size(); ++i) data[i] -= lr * grad[i];
    p.tensor->zero_grad();
  }
}

Optimizer::Optimizer(OptimizerConfig config, std::vector<NamedParam> params)
    : config_(config), params_(std::move(params)) {
  config_.schedule.validate();
  if (config_.kind == OptimizerKind::adam) {
    for (const auto& p : params_) {
      first_moment_.emplace_back(p.tensor->size(), 0.0);
      second_moment_.emplace_back(p.tensor->size(), 0.0);
    }
  }
}

void Optimizer::step(std::int64_t schedule_step) {
  if (config_.kind == OptimizerKind::sgd) {
    sgd_step(params_, config_.schedule, schedule_step);
    ++updates_;
    return;
  }
  require_grads(params_);
  ++updates_;
  const double lr = config_.schedule.lr(schedule_step);
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(updates_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(updates_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto data = params_[k].tensor->data();
    auto grad = params_[k].tensor->grad();
    auto& m = first_moment_[k];
    auto& v = second_moment_[k];
    for (std::size_t i = 0; i < data.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      data[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
    params_[k].tensor->zero_grad();
  }
}

} // namespace hope
