#include "hope/training.hpp"

#include "hope/errors.hpp"
#include "hope/keypoints.hpp"
#include "hope/metrics.hpp"
#include "hope/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace hope {

using json = nlohmann::ordered_json;

// ---- configuration -------------------------------------------------------------

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.preset = "desk";
  c.stage1 = {50, {1e-3, 0.9, 1}};
  c.stage2 = {200, {1e-3, 0.1, 80}};
  c.stage3 = {50, {1e-3, 0.9, 1}};
  return c;
}

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.preset = "paper";
  c.stage1 = {5000, {1e-3, 0.9, 100}};
  c.stage2 = {10000, {1e-3, 0.1, 4000}};
  c.stage3 = {5000, {1e-3, 0.9, 100}};
  return c;
}

TrainConfig TrainConfig::from_preset(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  throw UsageError("unknown preset '" + name + "' (expected desk or paper)");
}

void TrainConfig::validate() const {
  for (const StageConfig* s : {&stage1, &stage2, &stage3}) s->schedule.validate();
  if (batch_size == 0) throw UsageError("batch_size must be positive");
  if (!(noise_sigma >= 0.0)) throw UsageError("noise_sigma must be non-negative");
  weights.validate();
}

namespace {

json stage_to_json(const StageConfig& s) {
  return {{"epochs", s.epochs},
          {"initial_lr", s.schedule.initial_lr},
          {"decay_factor", s.schedule.decay_factor},
          {"decay_every", s.schedule.decay_every}};
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      throw UsageError(where + ": unknown key '" + key + "'");
    }
  }
}

void stage_from_json(const json& j, StageConfig& s, const std::string& where) {
  reject_unknown(j, {"epochs", "initial_lr", "decay_factor", "decay_every"}, where);
  if (j.contains("epochs")) s.epochs = j["epochs"].get<std::size_t>();
  if (j.contains("initial_lr")) s.schedule.initial_lr = j["initial_lr"].get<double>();
  if (j.contains("decay_factor")) s.schedule.decay_factor = j["decay_factor"].get<double>();
  if (j.contains("decay_every")) s.schedule.decay_every = j["decay_every"].get<std::int64_t>();
}

} // namespace

std::string TrainConfig::to_json() const {
  json j;
  j["preset"] = preset;
  j["stage1"] = stage_to_json(stage1);
  j["stage2"] = stage_to_json(stage2);
  j["stage3"] = stage_to_json(stage3);
  j["optimizer"] = hope::to_string(optimizer);
  j["batch_size"] = batch_size;
  j["noise_sigma"] = noise_sigma;
  j["alpha"] = weights.alpha;
  j["beta"] = weights.beta;
  j["seed"] = seed;
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw UsageError("train config: expected a JSON object");
    reject_unknown(j,
                   {"preset", "stage1", "stage2", "stage3", "optimizer", "batch_size", "noise_sigma", "alpha",
                    "beta", "seed"},
                   "train config");
    TrainConfig c = from_preset(j.value("preset", std::string("desk")));
    if (j.contains("stage1")) stage_from_json(j["stage1"], c.stage1, "train config stage1");
    if (j.contains("stage2")) stage_from_json(j["stage2"], c.stage2, "train config stage2");
    if (j.contains("stage3")) stage_from_json(j["stage3"], c.stage3, "train config stage3");
    if (j.contains("optimizer")) c.optimizer = parse_optimizer_kind(j["optimizer"].get<std::string>());
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("noise_sigma")) c.noise_sigma = j["noise_sigma"].get<double>();
    if (j.contains("alpha")) c.weights.alpha = j["alpha"].get<double>();
    if (j.contains("beta")) c.weights.beta = j["beta"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("train config: ") + e.what());
  }
}

// ---- log -----------------------------------------------------------------------

void write_log_header(std::ostream& out) { out << "step,stage,lr,loss_init2d,loss_2d,loss_3d,total\n"; }

void write_log_row(std::ostream& out, const LogRow& row) {
  auto cell = [&out](double v) {
    out << ',';
    if (std::isnan(v)) return;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  out << row.step << ',' << row.stage;
  cell(row.lr);
  cell(row.loss_init2d);
  cell(row.loss_2d);
  cell(row.loss_3d);
  cell(row.total);
  out << '\n';
}

// ---- shared epoch loop ---------------------------------------------------------

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct BatchLoss {
  Var total;
  double init2d = kNaN;
  double refined2d = kNaN;
  double lift3d = kNaN;
};

using BatchFn = std::function<BatchLoss(Tape&, std::span<const std::size_t>, std::uint64_t noise_seed)>;
// Sees the accumulated gradients before the optimizer consumes them.
using GradientHook = std::function<void()>;

std::vector<std::vector<double>> snapshot(std::span<const NamedParam> params) {
  std::vector<std::vector<double>> out;
  for (const NamedParam& p : params) out.emplace_back(p.tensor->data().begin(), p.tensor->data().end());
  return out;
}

void restore(std::span<const NamedParam> params, const std::vector<std::vector<double>>& saved) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::copy(saved[i].begin(), saved[i].end(), params[i].tensor->data().begin());
    params[i].tensor->zero_grad();
  }
}

struct EpochResult {
  double init2d = kNaN;
  double refined2d = kNaN;
  double lift3d = kNaN;
  double total = 0.0;
};

class EpochRunner {
public:
  EpochRunner(std::vector<NamedParam> params, OptimizerConfig optimizer, std::size_t n, std::size_t batch_size,
              std::uint64_t seed)
      : params_(std::move(params)), optimizer_(std::move(optimizer), params_), order_(n), batch_size_(batch_size),
        seed_(seed), shuffle_(derive_seed(seed, {0})) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  // Throws DivergenceError after restoring the parameters to their state at
  // the start of the epoch.
  EpochResult run(std::int64_t epoch, const BatchFn& batch_fn, const GradientHook& hook = {}) {
    const auto saved = snapshot(params_);
    std::shuffle(order_.begin(), order_.end(), shuffle_);
    EpochResult sum{0.0, 0.0, 0.0, 0.0};
    try {
      for (std::size_t begin = 0, b = 0; begin < order_.size(); begin += batch_size_, ++b) {
        const std::size_t end = std::min(order_.size(), begin + batch_size_);
        const std::span<const std::size_t> batch(order_.data() + begin, end - begin);
        Tape tape;
        const BatchLoss loss = batch_fn(tape, batch, derive_seed(seed_, {1, static_cast<std::uint64_t>(epoch), b}));
        tape.backward(loss.total);
        if (hook) hook();
        optimizer_.step(epoch);
        for (const NamedParam& p : params_) p.tensor->check_finite("updated parameter '" + p.name + "'");
        const auto w = static_cast<double>(batch.size());
        sum.init2d += w * loss.init2d;
        sum.refined2d += w * loss.refined2d;
        sum.lift3d += w * loss.lift3d;
        sum.total += w * loss.total.value()[0];
      }
    } catch (const NumericError& e) {
      restore(params_, saved);
      throw DivergenceError("epoch " + std::to_string(epoch) + ": " + e.what());
    }
    const auto n = static_cast<double>(order_.size());
    return {sum.init2d / n, sum.refined2d / n, sum.lift3d / n, sum.total / n};
  }

  const std::vector<NamedParam>& params() const { return params_; }

private:
  std::vector<NamedParam> params_;
  Optimizer optimizer_;
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  Rng shuffle_;
};

double scalar(Var v) { return v.value()[0]; }

} // namespace

// ---- staged pipeline training --------------------------------------------------

std::vector<LogRow> train(HopePipeline& pipeline, std::span<const SampleRecord> data, const TrainConfig& config,
                          const EpochCallback& on_epoch) {
  config.validate();
  if (data.empty()) throw UsageError("train: empty dataset");
  std::vector<LogRow> log;
  std::int64_t step = 0;

  auto run_stage = [&](int stage, const StageConfig& sc, std::vector<NamedParam> params, const BatchFn& fn) {
    if (sc.epochs == 0) return;
    EpochRunner runner(std::move(params), {config.optimizer, sc.schedule}, data.size(), config.batch_size,
                       derive_seed(config.seed, {static_cast<std::uint64_t>(stage)}));
    for (std::size_t e = 0; e < sc.epochs; ++e) {
      const auto epoch = static_cast<std::int64_t>(e);
      EpochResult r;
      try {
        r = runner.run(epoch, fn);
      } catch (const DivergenceError& err) {
        throw DivergenceError("stage " + std::to_string(stage) + " " + err.what());
      }
      LogRow row{step++, stage, sc.schedule.lr(epoch), r.init2d, r.refined2d, r.lift3d, r.total};
      log.push_back(row);
      if (on_epoch) on_epoch(row);
    }
  };

  const HopeLossWeights& w = config.weights;

  std::vector<NamedParam> stage1_params = pipeline.encoder().parameters();
  pipeline.refine().collect_parameters("refine", stage1_params);
  run_stage(1, config.stage1, stage1_params, [&](Tape& tape, std::span<const std::size_t> batch, std::uint64_t) {
    const auto encoded = pipeline.encoder().encode(tape, data, batch);
    const Var refined = pipeline.refine().forward(tape, encoded.features, encoded.init2d);
    const Var gt2d = tape.constant(stack_gt2d(data, batch));
    const Var l_init = mse(encoded.init2d, gt2d);
    const Var l_2d = mse(refined, gt2d);
    return BatchLoss{add(scale(l_init, w.alpha), scale(l_2d, w.beta)), scalar(l_init), scalar(l_2d), kNaN};
  });

  run_stage(2, config.stage2, pipeline.unet().parameters(),
            [&](Tape& tape, std::span<const std::size_t> batch, std::uint64_t noise_seed) {
              const Var input = tape.constant(add_noise(stack_gt2d(data, batch), config.noise_sigma, noise_seed));
              const Var l_3d = mse(pipeline.unet().forward(tape, input), tape.constant(stack_gt3d(data, batch)));
              return BatchLoss{l_3d, kNaN, kNaN, scalar(l_3d)};
            });

  run_stage(3, config.stage3, pipeline.parameters(), [&](Tape& tape, std::span<const std::size_t> batch, std::uint64_t) {
    const auto f = pipeline.forward(tape, data, batch);
    const HopeLoss loss = hope_loss(f.init2d, f.refined2d, f.pred3d, tape.constant(stack_gt2d(data, batch)),
                                    tape.constant(stack_gt3d(data, batch)), w);
    return BatchLoss{loss.total, scalar(loss.init2d), scalar(loss.refined2d), scalar(loss.lift3d)};
  });

  return log;
}

// ---- bare lifter training ------------------------------------------------------

LifterTrainStats train_lifter(Lifter& lifter, std::span<const SampleRecord> data, const LifterTrainConfig& config) {
  if (data.empty()) throw UsageError("train_lifter: empty dataset");
  if (config.batch_size == 0) throw UsageError("train_lifter: batch_size must be positive");
  config.optimizer.schedule.validate();

  LifterTrainStats stats;
  const std::vector<NamedParam> params = lifter.parameters();
  const std::vector<NamedParam> pools = lifter.pooling_parameters();
  EpochRunner runner(params, config.optimizer, data.size(), config.batch_size, config.seed);

  const BatchFn fn = [&](Tape& tape, std::span<const std::size_t> batch, std::uint64_t noise_seed) {
    const Var input = tape.constant(add_noise(stack_gt2d(data, batch), config.noise_sigma, noise_seed));
    const Var l_3d = mse(lifter.forward(tape, input), tape.constant(stack_gt3d(data, batch)));
    return BatchLoss{l_3d, kNaN, kNaN, scalar(l_3d)};
  };
  const GradientHook hook = [&] {
    ++stats.steps;
    if (stats.all_grads_zero) {
      for (const NamedParam& p : params) {
        const auto g = p.tensor->grad();
        if (std::any_of(g.begin(), g.end(), [](double v) { return v != 0.0; })) {
          stats.all_grads_zero = false;
          break;
        }
      }
    }
    if (pools.empty()) return;
    bool all_nonzero = true;
    for (const NamedParam& p : pools) {
      const double norm = p.tensor->grad_norm();
      stats.min_pool_grad_norm = std::min(stats.min_pool_grad_norm, norm);
      all_nonzero = all_nonzero && norm > 0.0;
    }
    if (all_nonzero) ++stats.steps_with_pool_grads;
  };

  for (std::size_t e = 0; e < config.epochs; ++e) {
    try {
      stats.epoch_loss.push_back(runner.run(static_cast<std::int64_t>(e), fn, hook).lift3d);
    } catch (const DivergenceError& err) {
      stats.diverged = true;
      stats.divergence = err.what();
      break;
    }
  }
  return stats;
}

std::vector<Tensor> lift_records(Lifter& lifter, std::span<const SampleRecord> data, double noise_sigma,
                                 std::uint64_t noise_seed, std::size_t batch_size) {
  if (batch_size == 0) throw UsageError("lift_records: batch_size must be positive");
  std::vector<Tensor> out;
  out.reserve(data.size());
  for (std::size_t begin = 0, b = 0; begin < data.size(); begin += batch_size, ++b) {
    const std::size_t end = std::min(data.size(), begin + batch_size);
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    Tape tape;
    const Var input = tape.constant(add_noise(stack_gt2d(data, idx), noise_sigma, derive_seed(noise_seed, {b})));
    for (Tensor& t : split_samples(lifter.forward(tape, input).value())) out.push_back(std::move(t));
  }
  return out;
}

double evaluate_lifter(Lifter& lifter, std::span<const SampleRecord> data, double noise_sigma,
                       std::uint64_t noise_seed) {
  const std::vector<Tensor> preds = lift_records(lifter, data, noise_sigma, noise_seed);
  std::vector<Tensor> gts;
  gts.reserve(data.size());
  for (const SampleRecord& r : data) gts.push_back(r.gt3d);
  return mean_error(preds, gts);
}

} // namespace hope
