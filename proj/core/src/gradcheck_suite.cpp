#include "hope/gradcheck_suite.hpp"

#include "hope/dataset.hpp"
#include "hope/errors.hpp"
#include "hope/graph_layers.hpp"
#include "hope/keypoints.hpp"
#include "hope/lifters.hpp"
#include "hope/pipeline.hpp"
#include "hope/random.hpp"

#include <numeric>

namespace hope {

std::string to_string(GradCheckTarget target) {
  switch (target) {
  case GradCheckTarget::layers: return "layers";
  case GradCheckTarget::unet: return "unet";
  case GradCheckTarget::pipeline: return "pipeline";
  }
  return "?";
}

GradCheckTarget parse_gradcheck_target(const std::string& name) {
  for (auto t : {GradCheckTarget::layers, GradCheckTarget::unet, GradCheckTarget::pipeline}) {
    if (to_string(t) == name) return t;
  }
  throw UsageError("unknown gradcheck target '" + name + "' (expected layers, unet or pipeline)");
}

namespace {

using Forward = std::function<Var(Tape&)>;

class Suite {
public:
  Suite(std::uint64_t seed, const GradCheckOptions& options) : rng_(seed), options_(options) {}

  Tensor param(std::size_t rows, std::size_t cols, double bound = 1.0) {
    Tensor t = Tensor::zeros(rows, cols);
    fill_uniform(t, bound, rng_);
    t.set_requires_grad(true);
    return t;
  }

  // Checks mse(forward, random target) with respect to `params`.
  void check(const std::string& name, const Forward& forward, std::vector<NamedParam> params) {
    Tape probe;
    const Tensor& shape = forward(probe).value();
    Tensor target = Tensor::zeros(shape.rows(), shape.cols());
    fill_uniform(target, 1.0, rng_);
    check_loss(name, [&](Tape& tape) { return mse(forward(tape), tape.constant(target)); }, std::move(params));
  }

  void check_loss(const std::string& name, const LossBuilder& loss, std::vector<NamedParam> params,
                  std::size_t coords_per_param = 0) {
    GradCheckOptions opts = options_;
    opts.seed = rng_();
    if (coords_per_param > 0) opts.coords_per_param = coords_per_param;
    cases_.push_back({name, grad_check(loss, params, opts)});
  }

  Rng& rng() { return rng_; }
  std::vector<GradCheckCase> take() { return std::move(cases_); }

private:
  Rng rng_;
  GradCheckOptions options_;
  std::vector<GradCheckCase> cases_;
};

void layer_cases(Suite& s) {
  {
    Tensor a = s.param(3, 4), b = s.param(4, 2);
    s.check("matmul", [&](Tape& t) { return matmul(t.parameter(a), t.parameter(b)); }, {{"a", &a}, {"b", &b}});
  }
  {
    Tensor x = s.param(3, 4);
    s.check("relu", [&](Tape& t) { return relu(t.parameter(x)); }, {{"x", &x}});
    s.check("sigmoid", [&](Tape& t) { return sigmoid(t.parameter(x)); }, {{"x", &x}});
    s.check("scale", [&](Tape& t) { return scale(t.parameter(x), -2.5); }, {{"x", &x}});
    s.check("reshape", [&](Tape& t) { return reshape(t.parameter(x), 6, 2); }, {{"x", &x}});
    s.check("row_slice", [&](Tape& t) { return row_slice(t.parameter(x), 1, 3); }, {{"x", &x}});
    s.check("broadcast_rows", [&](Tape& t) { return broadcast_rows(t.parameter(x), 3); }, {{"x", &x}});
  }
  {
    Tensor a = s.param(3, 2), b = s.param(3, 3);
    s.check("concat_features", [&](Tape& t) { return concat_features(t.parameter(a), t.parameter(b)); },
            {{"a", &a}, {"b", &b}});
  }
  {
    Tensor a = s.param(3, 3), b = s.param(3, 3), bias = s.param(1, 3);
    s.check("add", [&](Tape& t) { return add(t.parameter(a), t.parameter(b)); }, {{"a", &a}, {"b", &b}});
    s.check("hadamard", [&](Tape& t) { return hadamard(t.parameter(a), t.parameter(b)); }, {{"a", &a}, {"b", &b}});
    s.check("add_row", [&](Tape& t) { return add_row(t.parameter(a), t.parameter(bias)); },
            {{"a", &a}, {"bias", &bias}});
    s.check("mse", [&](Tape& t) { return mse(t.parameter(a), t.parameter(b)); }, {{"pred", &a}, {"target", &b}});
  }
  {
    Tensor m = s.param(2, 3), x = s.param(6, 4);
    s.check("node_mix", [&](Tape& t) { return node_mix(t.parameter(m), t.parameter(x)); }, {{"mix", &m}, {"x", &x}});
  }

  const std::size_t n = 6;
  const std::size_t batch = 2;
  for (auto act : {Activation::relu, Activation::linear}) {
    // Narrow-to-wide and wide-to-narrow exercise both association orders.
    for (auto [in, out] : {std::pair<std::size_t, std::size_t>{3, 5}, {5, 3}}) {
      AdaptiveGraphConv conv(s.param(n, n, 0.6), s.param(in, out), act);
      Tensor x = s.param(batch * n, in);
      std::vector<NamedParam> params{{"x", &x}};
      conv.collect_parameters("conv", params);
      s.check(std::string("adaptive_conv_") + (act == Activation::relu ? "relu_" : "linear_") + std::to_string(in) +
                  "x" + std::to_string(out),
              [&](Tape& t) { return conv.forward(t, t.parameter(x)); }, params);
    }
  }
  {
    GraphPool pool(n, 3, s.rng());
    Tensor x = s.param(batch * n, 4);
    std::vector<NamedParam> params{{"x", &x}};
    pool.collect_parameters("pool", params);
    s.check("graph_pool", [&](Tape& t) { return pool.forward(t, t.parameter(x)); }, params);
  }
  {
    GraphUnpool unpool(3, n, s.rng());
    Tensor x = s.param(batch * 3, 4);
    std::vector<NamedParam> params{{"x", &x}};
    unpool.collect_parameters("unpool", params);
    s.check("graph_unpool", [&](Tape& t) { return unpool.forward(t, t.parameter(x)); }, params);
  }
  {
    GPoolLayer gpool(n, 3, 4, s.rng());
    Tensor x = s.param(batch * n, 4);
    std::vector<NamedParam> params{{"x", &x}};
    gpool.collect_parameters("gpool", params);
    s.check("gpool", [&](Tape& t) { return gpool.forward(t, t.parameter(x)).features; }, params);
    s.check("gpool_gunpool",
            [&](Tape& t) {
              auto pooled = gpool.forward(t, t.parameter(x));
              return gunpool_forward(pooled.features, pooled.selected, n);
            },
            params);
  }
  {
    const NodeGrouping& grouping = keypoints::default_groupings().front();
    Tensor x = s.param(batch * grouping.n_in, 3);
    s.check("fixed_pool", [&](Tape& t) { return fixed_pool_forward(t.parameter(x), grouping); }, {{"x", &x}});
    Tensor y = s.param(batch * grouping.n_out(), 3);
    s.check("fixed_unpool", [&](Tape& t) { return fixed_unpool_forward(t.parameter(y), grouping); }, {{"x", &y}});
  }
  {
    const std::size_t rows = keypoints::kNodes;
    Tensor i2 = s.param(rows, 2), r2 = s.param(rows, 2), p3 = s.param(rows, 3);
    Tensor g2 = s.param(rows, 2), g3 = s.param(rows, 3);
    s.check("hope_loss",
            [&](Tape& t) {
              return hope_loss(t.parameter(i2), t.parameter(r2), t.parameter(p3), t.constant(g2), t.constant(g3), {})
                  .total;
            },
            {{"init2d", &i2}, {"refined2d", &r2}, {"pred3d", &p3}});
  }
}

// Ground-truth 2D of a couple of synthetic samples, as lifter input.
Tensor lifter_input(std::uint64_t seed, std::size_t batch) {
  const Dataset data = generate_dataset(batch, seed);
  std::vector<std::size_t> idx(batch);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return stack_gt2d(data, idx);
}

void unet_cases(Suite& s, std::uint64_t seed) {
  Tensor input = lifter_input(seed, 2);
  input.set_requires_grad(true);
  auto check_lifter = [&](const std::string& name, Lifter& lifter) {
    std::vector<NamedParam> params = lifter.parameters();
    params.push_back({"input", &input});
    s.check(name, [&](Tape& t) { return scale(lifter.forward(t, t.parameter(input)), 0.01); }, params);
  };
  for (auto pooling : {PoolingKind::trainable, PoolingKind::fixed, PoolingKind::gpool}) {
    UNetConfig config;
    config.feature_schedule = {4, 6, 8, 10};
    config.pooling = pooling;
    GraphUNet unet(config, seed);
    check_lifter("unet_" + to_string(pooling), unet);
  }
  FullyConnectedLifter fc(8, seed);
  check_lifter("fully_connected", fc);
  AdaptiveGcnLifter gcn(8, AdjacencyInit::identity, seed);
  check_lifter("adaptive_gcn", gcn);
}

void pipeline_cases(Suite& s, std::uint64_t seed) {
  const Dataset data = generate_dataset(2, seed);
  const std::vector<std::size_t> idx{0, 1};
  const Tensor gt2d = stack_gt2d(data, idx);
  const Tensor gt3d = stack_gt3d(data, idx);

  StubEncoder encoder(derive_seed(seed, {1}));
  s.check("stub_encoder_features", [&](Tape& t) { return encoder.encode(t, data, idx).features; },
          encoder.parameters());
  s.check("stub_encoder_init2d", [&](Tape& t) { return scale(encoder.encode(t, data, idx).init2d, 1.0 / 320.0); },
          encoder.parameters());

  RefineNet refine(derive_seed(seed, {2}));
  Tensor features = s.param(2, kImageFeatures, 0.05);
  Tensor init2d = gt2d;
  init2d.set_requires_grad(true);
  std::vector<NamedParam> refine_params{{"features", &features}, {"init2d", &init2d}};
  refine.collect_parameters("refine", refine_params);
  s.check("refine_net",
          [&](Tape& t) { return scale(refine.forward(t, t.parameter(features), t.parameter(init2d)), 1.0 / 320.0); },
          refine_params);

  // Full cascade under the training loss; the big tensors are sampled sparsely.
  HopePipeline pipeline(UNetConfig{}, seed);
  s.check_loss(
      "pipeline",
      [&](Tape& t) {
        const auto out = pipeline.forward(t, data, idx);
        const auto loss = hope_loss(out.init2d, out.refined2d, out.pred3d, t.constant(gt2d), t.constant(gt3d), {});
        return scale(loss.total, 1e-4);
      },
      pipeline.parameters(), 8);
}

} // namespace

std::vector<GradCheckCase> run_gradcheck_suite(GradCheckTarget target, std::uint64_t seed,
                                               const GradCheckOptions& options) {
  Suite s(seed, options);
  switch (target) {
  case GradCheckTarget::layers: layer_cases(s); break;
  case GradCheckTarget::unet: unet_cases(s, seed); break;
  case GradCheckTarget::pipeline: pipeline_cases(s, seed); break;
  }
  return s.take();
}

} // namespace hope
