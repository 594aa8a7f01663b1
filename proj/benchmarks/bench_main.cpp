#include "hope/autodiff.hpp"
#include "hope/dataset.hpp"
#include "hope/lifters.hpp"
#include "hope/metrics.hpp"
#include "hope/pipeline.hpp"
#include "hope/random.hpp"

#include <benchmark/benchmark.h>

#include <numeric>

using namespace hope;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t = Tensor::zeros(rows, cols);
  fill_uniform(t, 1.0, rng);
  return t;
}

const Dataset& samples() {
  static const Dataset d = generate_dataset(64, 3);
  return d;
}

std::vector<std::size_t> first(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Tensor a = random_tensor(n, n, 1), b = random_tensor(n, n, 2);
  for (auto _ : state) {
    Tape t;
    benchmark::DoNotOptimize(matmul(t.constant(a), t.constant(b)).value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(29)->Arg(128)->Arg(512);

void BM_AdaptiveConvForwardBackward(benchmark::State& state) {
  Rng rng(4);
  const auto batch = static_cast<std::size_t>(state.range(0));
  AdaptiveGraphConv conv(Tensor::identity(29), 64, 64, Activation::relu, rng);
  const Tensor x = random_tensor(29 * batch, 64, 5);
  std::vector<NamedParam> params;
  conv.collect_parameters("conv", params);
  for (auto _ : state) {
    Tape t;
    zero_grads(params);
    const Var y = conv.forward(t, t.constant(x));
    t.backward(mse(y, t.constant(Tensor::zeros(y.rows(), y.cols()))));
  }
}
BENCHMARK(BM_AdaptiveConvForwardBackward)->Arg(1)->Arg(32);

void BM_UNetForward(benchmark::State& state) {
  GraphUNet unet(UNetConfig{}, 1);
  const auto batch = static_cast<std::size_t>(state.range(0));
  const Tensor x = stack_gt2d(samples(), first(batch));
  for (auto _ : state) {
    Tape t;
    benchmark::DoNotOptimize(unet.forward(t, t.constant(x)).value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_UNetForward)->Arg(1)->Arg(32);

void BM_UNetForwardBackward(benchmark::State& state) {
  GraphUNet unet(UNetConfig{}, 1);
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto idx = first(batch);
  const Tensor x = stack_gt2d(samples(), idx), y = stack_gt3d(samples(), idx);
  const auto params = unet.parameters();
  for (auto _ : state) {
    zero_grads(params);
    Tape t;
    t.backward(mse(unet.forward(t, t.constant(x)), t.constant(y)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_UNetForwardBackward)->Arg(1)->Arg(32);

void BM_PipelineTrainStep(benchmark::State& state) {
  HopePipeline pipe(UNetConfig{}, 2);
  const auto idx = first(static_cast<std::size_t>(state.range(0)));
  const Tensor g2 = stack_gt2d(samples(), idx), g3 = stack_gt3d(samples(), idx);
  const auto params = pipe.parameters();
  for (auto _ : state) {
    zero_grads(params);
    Tape t;
    const auto f = pipe.forward(t, samples(), idx);
    const auto loss = hope_loss(f.init2d, f.refined2d, f.pred3d, t.constant(g2), t.constant(g3), {});
    t.backward(loss.total);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PipelineTrainStep)->Arg(1)->Arg(32);

void BM_PcpCurve(benchmark::State& state) {
  std::vector<Tensor> preds, gts;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    preds.push_back(random_tensor(29, 3, 2 * i));
    gts.push_back(random_tensor(29, 3, 2 * i + 1));
  }
  const auto thresholds = linear_thresholds(0.0, 2.0, 51);
  for (auto _ : state) benchmark::DoNotOptimize(auc(pcp_curve(preds, gts, thresholds)));
}
BENCHMARK(BM_PcpCurve);

} // namespace

BENCHMARK_MAIN();
