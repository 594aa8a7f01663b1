#include "hope/dataset.hpp"
#include "hope/errors.hpp"
#include "hope/training.hpp"
#include "test_util.hpp"

#include <cmath>
#include <sstream>

using namespace hope;
using hope::test::bitwise_equal;

namespace {

UNetConfig tiny_unet() {
  UNetConfig c;
  c.feature_schedule = {6, 6, 6, 6};
  return c;
}

TrainConfig tiny_config(std::uint64_t seed) {
  TrainConfig c = TrainConfig::desk();
  c.stage1.epochs = 2;
  c.stage2.epochs = 3;
  c.stage3.epochs = 2;
  c.batch_size = 4;
  c.seed = seed;
  return c;
}

const Dataset& data10() {
  static const Dataset d = generate_dataset(10, 5);
  return d;
}

} // namespace

TEST(TrainConfig, Presets) {
  const TrainConfig paper = TrainConfig::from_preset("paper");
  EXPECT_EQ(paper.stage1.epochs, 5000u);
  EXPECT_EQ(paper.stage2.epochs, 10000u);
  EXPECT_EQ(paper.stage3.epochs, 5000u);
  EXPECT_NEAR(paper.stage1.schedule.lr(250), 0.00081, 1e-15);
  EXPECT_NEAR(paper.stage2.schedule.lr(8000), 1e-5, 1e-17);
  EXPECT_NEAR(paper.stage3.schedule.lr(250), 0.00081, 1e-15);
  const TrainConfig desk = TrainConfig::from_preset("desk");
  EXPECT_EQ(desk.stage1.epochs, 50u);
  EXPECT_EQ(desk.stage2.epochs, 200u);
  EXPECT_EQ(desk.stage3.epochs, 50u);
  EXPECT_EQ(desk.batch_size, 32u);
  EXPECT_EQ(desk.noise_sigma, 10.0);
  EXPECT_EQ(desk.weights.alpha, 0.1);
  EXPECT_EQ(desk.weights.beta, 0.1);
  EXPECT_THROW(TrainConfig::from_preset("huge"), UsageError);
}

TEST(TrainConfig, JsonRoundTripAndRejection) {
  TrainConfig c = TrainConfig::paper();
  c.seed = 99;
  c.noise_sigma = 20.0;
  c.stage2.schedule.decay_every = 123;
  const TrainConfig back = TrainConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.preset, "paper");
  EXPECT_EQ(back.stage2.schedule.decay_every, 123);

  const TrainConfig partial = TrainConfig::from_json(R"({"preset": "paper", "seed": 4})");
  EXPECT_EQ(partial.stage2.epochs, 10000u);
  EXPECT_EQ(partial.seed, 4u);
  EXPECT_EQ(TrainConfig::from_json("{}").preset, "desk");
  EXPECT_THROW(TrainConfig::from_json(R"({"learning_rate": 0.1})"), UsageError);
  EXPECT_THROW(TrainConfig::from_json("{not json"), DataError);
}

TEST(TrainConfig, Validation) {
  TrainConfig c = TrainConfig::desk();
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = TrainConfig::desk();
  c.noise_sigma = -1.0;
  EXPECT_THROW(c.validate(), UsageError);
  c = TrainConfig::desk();
  c.weights.alpha = -1.0;
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(TrainLog, ColumnsAndEmptyNaNCells) {
  std::ostringstream out;
  write_log_header(out);
  LogRow row;
  row.step = 7;
  row.stage = 2;
  row.lr = 0.5;
  row.loss_3d = 1.25;
  row.total = 1.25;
  write_log_row(out, row);
  EXPECT_EQ(out.str(), "step,stage,lr,loss_init2d,loss_2d,loss_3d,total\n7,2,0.5,,,1.25,1.25\n");
}

TEST(Train, RunsAllStagesWithFiniteLosses) {
  HopePipeline pipe(tiny_unet(), 1);
  std::vector<LogRow> seen;
  const auto log = train(pipe, data10(), tiny_config(1), [&](const LogRow& r) { seen.push_back(r); });
  ASSERT_EQ(log.size(), 7u);
  ASSERT_EQ(seen.size(), 7u);
  const int stages[] = {1, 1, 2, 2, 2, 3, 3};
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_EQ(log[i].step, static_cast<std::int64_t>(i));
    EXPECT_EQ(log[i].stage, stages[i]);
    EXPECT_TRUE(std::isfinite(log[i].total));
  }
  EXPECT_TRUE(std::isnan(log[0].loss_3d));
  EXPECT_TRUE(std::isfinite(log[0].loss_init2d));
  EXPECT_TRUE(std::isnan(log[2].loss_2d));
  EXPECT_TRUE(std::isfinite(log[2].loss_3d));
  EXPECT_TRUE(std::isfinite(log[6].loss_init2d) && std::isfinite(log[6].loss_3d));
  // Stage 1 decays x0.9 per epoch on the desk preset.
  EXPECT_NEAR(log[1].lr, 0.9e-3, 1e-18);
}

TEST(Train, DeterministicUnderSeed) {
  HopePipeline a(tiny_unet(), 2), b(tiny_unet(), 2);
  const auto la = train(a, data10(), tiny_config(3));
  const auto lb = train(b, data10(), tiny_config(3));
  for (std::size_t i = 0; i < la.size(); ++i) EXPECT_EQ(la[i].total, lb[i].total);
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_TRUE(bitwise_equal(*pa[i].tensor, *pb[i].tensor)) << pa[i].name;
}

TEST(Train, Stage2ReducesLiftingLoss) {
  HopePipeline pipe(tiny_unet(), 4);
  TrainConfig c = tiny_config(4);
  c.stage1.epochs = 0;
  c.stage3.epochs = 0;
  c.stage2.epochs = 60; // small U-Nets sit on a plateau for the first ~30 epochs
  c.noise_sigma = 0.0;
  const auto log = train(pipe, data10(), c);
  ASSERT_EQ(log.size(), 60u);
  EXPECT_LT(log.back().loss_3d, 0.5 * log.front().loss_3d);
}

TEST(Train, DivergenceRollsBackAndThrows) {
  HopePipeline pipe(tiny_unet(), 5);
  TrainConfig c = tiny_config(5);
  c.stage1.epochs = 0;
  c.stage3.epochs = 0;
  c.stage2.epochs = 5;
  c.optimizer = OptimizerKind::sgd;
  c.stage2.schedule = {1e150, 1.0, 1};
  EXPECT_THROW(train(pipe, data10(), c), DivergenceError);
  for (const auto& p : pipe.parameters()) EXPECT_TRUE(p.tensor->all_finite()) << p.name;
}

TEST(TrainLifter, ZerosKernelIsFrozen) {
  UNetConfig cfg = tiny_unet();
  cfg.adjacency_init = AdjacencyInit::zeros;
  GraphUNet unet(cfg, 6);
  const double before = evaluate_lifter(unet, data10());
  LifterTrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 5;
  const auto stats = train_lifter(unet, data10(), tc);
  EXPECT_TRUE(stats.all_grads_zero);
  EXPECT_EQ(stats.steps, 6u);
  EXPECT_EQ(evaluate_lifter(unet, data10()), before);
}

TEST(TrainLifter, TrainablePoolingGetsGradientsEveryStep) {
  GraphUNet unet(tiny_unet(), 7);
  LifterTrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 5;
  const auto stats = train_lifter(unet, data10(), tc);
  EXPECT_FALSE(stats.all_grads_zero);
  EXPECT_EQ(stats.steps_with_pool_grads, stats.steps);
  EXPECT_GT(stats.min_pool_grad_norm, 0.0);
  EXPECT_FALSE(stats.diverged);
}

TEST(LiftRecords, MatchesEvaluate) {
  GraphUNet unet(tiny_unet(), 8);
  const auto preds = lift_records(unet, data10(), 0.0, 0, 3);
  ASSERT_EQ(preds.size(), 10u);
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < 29; ++k) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < 3; ++c) d2 += std::pow(preds[i](k, c) - data10()[i].gt3d(k, c), 2);
      s += std::sqrt(d2);
    }
    sum += s / 29.0;
  }
  EXPECT_NEAR(evaluate_lifter(unet, data10()), sum / 10.0, 1e-9);
}
