#include "hope/ablation.hpp"

#include "hope/errors.hpp"
#include "hope/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace hope {

std::string to_string(AblationSuite suite) {
  switch (suite) {
  case AblationSuite::architecture: return "architecture";
  case AblationSuite::pooling: return "pooling";
  case AblationSuite::adjacency_init: return "adjacency_init";
  }
  return "?";
}

AblationSuite parse_ablation_suite(const std::string& name) {
  for (auto s : {AblationSuite::architecture, AblationSuite::pooling, AblationSuite::adjacency_init}) {
    if (to_string(s) == name) return s;
  }
  throw UsageError("unknown ablation suite '" + name + "' (expected architecture, pooling or adjacency_init)");
}

std::vector<std::string> ablation_variants(AblationSuite suite) {
  switch (suite) {
  case AblationSuite::architecture: return {"fully_connected", "adaptive_gcn", "adaptive_graph_unet"};
  case AblationSuite::pooling: return {"gpool", "fixed", "trainable"};
  case AblationSuite::adjacency_init: return {"zeros", "random", "ones", "skeleton", "identity"};
  }
  return {};
}

void AblationConfig::validate() const {
  if (batch_size == 0) throw UsageError("ablation: batch_size must be positive");
  if (hidden == 0) throw UsageError("ablation: hidden width must be positive");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw UsageError("ablation: holdout_fraction must lie in (0, 1)");
  }
  if (!(noise_sigma >= 0.0)) throw UsageError("ablation: noise_sigma must be non-negative");
  optimizer.schedule.validate();
  UNetConfig probe;
  probe.feature_schedule = unet_features;
  probe.validate();
}

std::unique_ptr<Lifter> make_ablation_lifter(AblationSuite suite, const std::string& variant,
                                             const AblationConfig& config, std::uint64_t seed) {
  UNetConfig unet;
  unet.feature_schedule = config.unet_features;
  switch (suite) {
  case AblationSuite::architecture:
    if (variant == "fully_connected") return std::make_unique<FullyConnectedLifter>(config.hidden, seed);
    if (variant == "adaptive_gcn") {
      return std::make_unique<AdaptiveGcnLifter>(config.hidden, AdjacencyInit::identity, seed);
    }
    if (variant == "adaptive_graph_unet") return std::make_unique<GraphUNet>(unet, seed);
    break;
  case AblationSuite::pooling:
    if (variant == "gpool" || variant == "fixed" || variant == "trainable") {
      unet.pooling = parse_pooling_kind(variant);
      return std::make_unique<GraphUNet>(unet, seed);
    }
    break;
  case AblationSuite::adjacency_init: {
    const auto variants = ablation_variants(suite);
    if (std::find(variants.begin(), variants.end(), variant) != variants.end()) {
      unet.adjacency_init = parse_adjacency_init(variant);
      return std::make_unique<GraphUNet>(unet, seed);
    }
    break;
  }
  }
  throw UsageError("unknown variant '" + variant + "' for suite " + to_string(suite));
}

AblationRun run_ablation_variant(AblationSuite suite, const std::string& variant, std::span<const SampleRecord> train,
                                 std::span<const SampleRecord> holdout, std::uint64_t seed,
                                 const AblationConfig& config) {
  auto lifter = make_ablation_lifter(suite, variant, config, seed);
  AblationRun run;
  run.variant = variant;
  run.seed = seed;
  run.has_pooling_params = !lifter->pooling_parameters().empty();
  run.initial_error_mm = evaluate_lifter(*lifter, holdout);

  LifterTrainConfig tc;
  tc.epochs = config.epochs;
  tc.optimizer = config.optimizer;
  tc.batch_size = config.batch_size;
  tc.noise_sigma = config.noise_sigma;
  tc.seed = seed;
  const LifterTrainStats stats = train_lifter(*lifter, train, tc);

  run.final_error_mm = evaluate_lifter(*lifter, holdout);
  run.train_error_mm = evaluate_lifter(*lifter, train);
  run.diverged = stats.diverged;
  run.frozen = stats.steps > 0 && stats.all_grads_zero;
  run.steps = stats.steps;
  run.steps_with_pool_grads = stats.steps_with_pool_grads;
  return run;
}

AblationResult run_ablation(AblationSuite suite, std::span<const SampleRecord> dataset,
                            std::span<const std::uint64_t> seeds, const AblationConfig& config) {
  config.validate();
  if (seeds.empty()) throw UsageError("ablation: no seeds");
  const auto holdout_n = static_cast<std::size_t>(std::ceil(config.holdout_fraction * dataset.size()));
  if (dataset.size() < 2 || holdout_n >= dataset.size()) {
    throw UsageError("ablation: dataset too small for a train/holdout split");
  }
  const auto train = dataset.first(dataset.size() - holdout_n);
  const auto holdout = dataset.last(holdout_n);

  AblationResult result;
  result.suite = suite;
  const auto variants = ablation_variants(suite);
  result.runs.resize(variants.size() * seeds.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t task; (task = next++) < result.runs.size();) {
      try {
        result.runs[task] = run_ablation_variant(suite, variants[task / seeds.size()], train, holdout,
                                                 seeds[task % seeds.size()], config);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(result.runs.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (unsigned j = 0; j < jobs; ++j) threads.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t v = 0; v < variants.size(); ++v) {
    AblationRow row;
    row.variant = variants[v];
    row.frozen = true;
    const auto runs = std::span<const AblationRun>(result.runs).subspan(v * seeds.size(), seeds.size());
    for (const AblationRun& r : runs) {
      row.mean_error_mm += r.final_error_mm;
      row.diverged_runs += r.diverged ? 1 : 0;
      row.frozen = row.frozen && r.frozen;
    }
    const auto n = static_cast<double>(runs.size());
    row.mean_error_mm /= n;
    if (runs.size() > 1) {
      double sq = 0.0;
      for (const AblationRun& r : runs) sq += (r.final_error_mm - row.mean_error_mm) * (r.final_error_mm - row.mean_error_mm);
      row.std_over_seeds = std::sqrt(sq / (n - 1.0));
    }
    result.table.push_back(row);
  }
  return result;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

void write_ablation_table(std::ostream& out, const AblationResult& result) {
  out << "variant,mean_error_mm,std_over_seeds,status\n";
  for (const AblationRow& row : result.table) {
    std::string status = "ok";
    if (row.diverged_runs > 0) status = "diverged:" + std::to_string(row.diverged_runs);
    else if (row.frozen) status = "frozen";
    out << row.variant << ',' << num(row.mean_error_mm) << ',' << num(row.std_over_seeds) << ',' << status << '\n';
  }
}

void write_ablation_runs(std::ostream& out, const AblationResult& result) {
  out << "variant,seed,initial_error_mm,final_error_mm,train_error_mm,diverged,frozen\n";
  for (const AblationRun& r : result.runs) {
    out << r.variant << ',' << r.seed << ',' << num(r.initial_error_mm) << ',' << num(r.final_error_mm) << ',' << num(r.train_error_mm)
        << ',' << (r.diverged ? 1 : 0) << ',' << (r.frozen ? 1 : 0) << '\n';
  }
}

} // namespace hope
