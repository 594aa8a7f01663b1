#include "hope/adjacency.hpp"
#include "hope/errors.hpp"
#include "hope/graph_layers.hpp"
#include "hope/keypoints.hpp"
#include "hope/optim.hpp"
#include "test_util.hpp"

#include <cmath>
#include <sstream>

using namespace hope;
using hope::test::expect_near;
using hope::test::naive_matmul;
using hope::test::random_tensor;

namespace {

double sigmoid_ref(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Tensor run(const std::function<Var(Tape&)>& f) {
  Tape t;
  return f(t).value();
}

} // namespace

// ---- normalize_adjacency ----------------------------------------------------

TEST(NormalizeAdjacency, ZerosGiveIdentity) {
  expect_near(normalize_adjacency(Tensor::zeros(2, 2)), Tensor::identity(2), 1e-12);
}

TEST(NormalizeAdjacency, SingleEdgeGivesAllHalves) {
  expect_near(normalize_adjacency(Tensor::from_rows({{0, 1}, {1, 0}})), Tensor::filled(2, 2, 0.5), 1e-12);
}

TEST(NormalizeAdjacency, TriangleGivesAllThirds) {
  const Tensor tri = Tensor::from_rows({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
  expect_near(normalize_adjacency(tri), Tensor::filled(3, 3, 1.0 / 3.0), 1e-12);
}

TEST(NormalizeAdjacency, PathGraphAgainstDefinition) {
  // Path 0-1-2: degrees of A + I are 2, 3, 2.
  const Tensor path = Tensor::from_rows({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}});
  const double d[] = {2, 3, 2};
  const Tensor n = normalize_adjacency(path);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double hat = path(i, j) + (i == j ? 1.0 : 0.0);
      EXPECT_NEAR(n(i, j), hat / std::sqrt(d[i] * d[j]), 1e-12);
    }
  }
  EXPECT_TRUE(is_symmetric(n, 1e-15));
}

TEST(NormalizeAdjacency, RejectsBadInput) {
  EXPECT_THROW(normalize_adjacency(Tensor::zeros(2, 3)), DimensionError);
  EXPECT_THROW(normalize_adjacency(Tensor::from_rows({{0, -1}, {-1, 0}})), DomainError);
}

TEST(NormalizeAdjacency, SymmetricInputStaysSymmetric) {
  Tensor a = random_tensor(6, 6, 3);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = std::abs(a(j, i));
  }
  EXPECT_TRUE(is_symmetric(normalize_adjacency(a), 1e-14));
}

TEST(AdjacencyCsv, RoundTripIsExact) {
  const Tensor a = random_tensor(5, 5, 8);
  std::stringstream ss;
  write_adjacency_csv(ss, a);
  const Tensor back = read_adjacency_csv(ss);
  ASSERT_TRUE(a.same_shape(back));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.data()[i], back.data()[i]);
}

// ---- adaptive graph convolution ---------------------------------------------

TEST(AdaptiveGraphConv, IdentityKernelAndWeightsIsIdentity) {
  const Tensor x = random_tensor(4, 4, 10);
  AdaptiveGraphConv conv(Tensor::identity(4), Tensor::identity(4), Activation::linear);
  expect_near(run([&](Tape& t) { return conv.forward(t, t.constant(x)); }), x, 1e-15);
}

TEST(AdaptiveGraphConv, ZeroKernelKillsOutputAndGradients) {
  Rng rng(4);
  AdaptiveGraphConv conv(Tensor::zeros(5, 5), 3, 7, Activation::relu, rng);
  const Tensor x = random_tensor(10, 3, 11, 100.0);
  const Tensor target = random_tensor(10, 7, 12);
  Tape tape;
  const Var y = conv.forward(tape, tape.constant(x));
  for (double v : y.value().data()) EXPECT_EQ(v, 0.0);
  tape.backward(mse(y, tape.constant(target)));
  // relu'(0) = 0 blocks the kernel's gradient too.
  for (double g : conv.weights().grad()) EXPECT_EQ(g, 0.0);
  for (double g : conv.adjacency().grad()) EXPECT_EQ(g, 0.0);
}

TEST(AdaptiveGraphConv, TwoNodeCaseAgainstTripleLoop) {
  const Tensor a = Tensor::from_rows({{0.5, -1.0}, {2.0, 0.25}});
  const Tensor w = Tensor::from_rows({{1.0, -2.0, 0.5}, {0.0, 3.0, -1.0}});
  const Tensor x = Tensor::from_rows({{1.0, 2.0}, {-3.0, 0.5}});
  AdaptiveGraphConv conv(a, w, Activation::relu);
  const Tensor y = run([&](Tape& t) { return conv.forward(t, t.constant(x)); });
  Tensor expect = naive_matmul(naive_matmul(a, x), w);
  for (double& v : expect.data()) v = std::max(0.0, v);
  expect_near(y, expect, 1e-12);
}

TEST(AdaptiveGraphConv, BatchedBlocksAreIndependent) {
  Rng rng(5);
  AdaptiveGraphConv conv(random_tensor(3, 3, 6), 2, 4, Activation::linear, rng);
  const Tensor x = random_tensor(6, 2, 7);
  const Tensor y = run([&](Tape& t) { return conv.forward(t, t.constant(x)); });
  for (std::size_t b = 0; b < 2; ++b) {
    Tensor block = Tensor::zeros(3, 2);
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 2; ++c) block(r, c) = x(3 * b + r, c);
    }
    const Tensor expect = naive_matmul(naive_matmul(conv.adjacency(), block), conv.weights());
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(y(3 * b + r, c), expect(r, c), 1e-12);
    }
  }
}

TEST(AdaptiveGraphConv, RejectsMismatchedNodeCount) {
  AdaptiveGraphConv conv(Tensor::identity(3), Tensor::identity(2), Activation::linear);
  Tape t;
  EXPECT_THROW(conv.forward(t, t.constant(Tensor::zeros(4, 2))), DimensionError);
}

// ---- trainable pooling / unpooling ------------------------------------------

TEST(GraphPool, SelectorPicksRows) {
  GraphPool pool(Tensor::from_rows({{0, 0, 1, 0}, {1, 0, 0, 0}}));
  const Tensor x = random_tensor(4, 3, 20);
  const Tensor y = run([&](Tape& t) { return pool.forward(t, t.constant(x)); });
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(y(0, c), x(2, c));
    EXPECT_EQ(y(1, c), x(0, c));
  }
}

TEST(GraphPool, UniformRowGivesColumnMeans) {
  // P must have fewer rows than columns; a 1 x 4 averaging row qualifies.
  GraphPool pool(Tensor::filled(1, 4, 0.25));
  const Tensor x = random_tensor(4, 3, 21);
  const Tensor y = run([&](Tape& t) { return pool.forward(t, t.constant(x)); });
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(y(0, c), (x(0, c) + x(1, c) + x(2, c) + x(3, c)) / 4.0, 1e-15);
}

TEST(GraphPool, ReceivesGradientOnEveryStepOfToyRegression) {
  Rng rng(22);
  GraphPool pool(6, 3, rng);
  const Tensor x = random_tensor(12, 2, 23);
  const Tensor target = random_tensor(6, 2, 24);
  std::vector<NamedParam> params;
  pool.collect_parameters("pool", params);
  Optimizer opt({OptimizerKind::sgd, {0.1, 1.0, 1}}, params);
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 50; ++step) {
    Tape tape;
    const Var loss = mse(pool.forward(tape, tape.constant(x)), tape.constant(target));
    tape.backward(loss);
    EXPECT_GT(pool.matrix().grad_norm(), 0.0) << "step " << step;
    if (step == 0) first = loss.value()(0, 0);
    last = loss.value()(0, 0);
    opt.step(step);
  }
  EXPECT_LT(last, first);
}

TEST(GraphUnpool, DuplicationRepeatsRows) {
  GraphUnpool unpool(Tensor::from_rows({{1, 0}, {1, 0}, {0, 1}, {0, 1}}));
  const Tensor x = random_tensor(2, 3, 25);
  const Tensor y = run([&](Tape& t) { return unpool.forward(t, t.constant(x)); });
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(y(0, c), x(0, c));
    EXPECT_EQ(y(1, c), x(0, c));
    EXPECT_EQ(y(2, c), x(1, c));
    EXPECT_EQ(y(3, c), x(1, c));
  }
}

TEST(GraphUnpool, TransposeOfMeanPoolBroadcastsScaled) {
  // P averages pairs {0,1}, {2,3}; U = P^T hands each member half its group's value.
  const Tensor p = Tensor::from_rows({{0.5, 0.5, 0, 0}, {0, 0, 0.5, 0.5}});
  Tensor u = Tensor::zeros(4, 2);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 4; ++j) u(j, i) = p(i, j);
  }
  GraphUnpool unpool(u);
  const Tensor x = random_tensor(2, 2, 26);
  const Tensor y = run([&](Tape& t) { return unpool.forward(t, t.constant(x)); });
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(y(0, c), x(0, c) / 2.0, 1e-15);
    EXPECT_NEAR(y(3, c), x(1, c) / 2.0, 1e-15);
  }
}

TEST(GraphUnpool, DoublesNodesOnTheCoarsestLevel) {
  Rng rng(27);
  GraphUnpool unpool(4, 8, rng);
  const Tensor y = run([&](Tape& t) { return unpool.forward(t, t.constant(random_tensor(4, 5, 28))); });
  EXPECT_EQ(y.rows(), 8u);
  EXPECT_EQ(y.cols(), 5u);
}

TEST(GraphPool, ConstructorRejectsNonShrinkingShape) {
  EXPECT_THROW(GraphPool(Tensor::zeros(4, 4)), DimensionError);
  EXPECT_THROW(GraphUnpool(Tensor::zeros(2, 4)), DimensionError);
}

// ---- gPool baseline -----------------------------------------------------------

TEST(GPool, TiesKeepLowestIndices) {
  Tape t;
  Tensor p = Tensor::from_rows({{1.0}});
  p.set_requires_grad(true);
  const auto out = gpool_forward(t.constant(Tensor::filled(5, 1, 0.3)), t.parameter(p), 5, 3);
  ASSERT_EQ(out.selected.size(), 1u);
  EXPECT_EQ(out.selected[0], (std::vector<std::size_t>{0, 1, 2}));
}

TEST(GPool, HandSortedSelectionAndGating) {
  Tape t;
  Tensor p = Tensor::from_rows({{2.0}}); // |p| = 2, so scores equal the inputs
  p.set_requires_grad(true);
  const Tensor x = Tensor::from_rows({{0.1}, {0.9}, {-0.3}, {0.5}});
  const auto out = gpool_forward(t.constant(x), t.parameter(p), 4, 2);
  EXPECT_EQ(out.selected[0], (std::vector<std::size_t>{1, 3}));
  const Tensor& y = out.features.value();
  ASSERT_EQ(y.rows(), 2u);
  EXPECT_NEAR(y(0, 0), 0.9 * sigmoid_ref(0.9), 1e-15);
  EXPECT_NEAR(y(1, 0), 0.5 * sigmoid_ref(0.5), 1e-15);
}

TEST(GPool, PerBlockSelectionAndUnpoolScatter) {
  Tape t;
  Tensor p = Tensor::from_rows({{1.0, 0.0}});
  p.set_requires_grad(true);
  const Tensor x = Tensor::from_rows({{3, 1}, {1, 1}, {2, 1}, {-1, 5}, {4, 5}, {0, 5}});
  const auto out = gpool_forward(t.constant(x), t.parameter(p), 3, 2);
  ASSERT_EQ(out.selected.size(), 2u);
  EXPECT_EQ(out.selected[0], (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(out.selected[1], (std::vector<std::size_t>{1, 2}));
  const Tensor back = gunpool_forward(out.features, out.selected, 3).value();
  ASSERT_EQ(back.rows(), 6u);
  EXPECT_NEAR(back(0, 1), 1.0 * sigmoid_ref(3.0), 1e-15);
  EXPECT_EQ(back(1, 0), 0.0);
  EXPECT_EQ(back(1, 1), 0.0);
  EXPECT_EQ(back(3, 0), 0.0);
  EXPECT_NEAR(back(4, 1), 5.0 * sigmoid_ref(4.0), 1e-15);
}

TEST(GPool, KeepCount) {
  EXPECT_EQ(gpool_keep_count(29, 0.5), 15u);
  EXPECT_EQ(gpool_keep_count(8, 0.5), 4u);
  EXPECT_THROW(gpool_keep_count(8, 1.0), DomainError);
}

// ---- fixed pooling --------------------------------------------------------------

TEST(FixedPool, SingletonGroupsAreIdentity) {
  NodeGrouping g{3, {{0}, {1}, {2}}};
  const Tensor x = random_tensor(6, 2, 30);
  expect_near(run([&](Tape& t) { return fixed_pool_forward(t.constant(x), g); }), x, 0.0);
  expect_near(run([&](Tape& t) { return fixed_unpool_forward(t.constant(x), g); }), x, 0.0);
}

TEST(FixedPool, EqualRowsAverageToThemselves) {
  NodeGrouping g{3, {{0, 2}, {1}}};
  Tensor x = random_tensor(3, 4, 31);
  for (std::size_t c = 0; c < 4; ++c) x(2, c) = x(0, c);
  const Tensor y = run([&](Tape& t) { return fixed_pool_forward(t.constant(x), g); });
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(y(0, c), x(0, c), 1e-15);
}

TEST(FixedPool, HandGroupingMatchesHandAverages) {
  using namespace keypoints;
  const NodeGrouping& g = default_groupings()[0];
  ASSERT_EQ(g.n_in, 29u);
  ASSERT_EQ(g.n_out(), 15u);
  const Tensor x = random_tensor(29, 3, 32);
  const Tensor y = run([&](Tape& t) { return fixed_pool_forward(t.constant(x), g); });
  auto mean2 = [&](std::size_t a, std::size_t b, std::size_t c) { return 0.5 * (x(a, c) + x(b, c)); };
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(y(0, c), x(kWrist, c), 1e-15);
    for (std::size_t f = 0; f < kFingers; ++f) {
      EXPECT_NEAR(y(1 + 2 * f, c), mean2(finger_node(f, 0), finger_node(f, 1), c), 1e-15);
      EXPECT_NEAR(y(2 + 2 * f, c), mean2(finger_node(f, 2), finger_node(f, 3), c), 1e-15);
    }
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(y(11 + k, c), mean2(corner_node(2 * k), corner_node(2 * k + 1), c), 1e-15);
    }
  }
}

TEST(FixedPool, GroupingValidation) {
  EXPECT_THROW((NodeGrouping{3, {{0, 1}}}.validate()), UsageError);
  EXPECT_THROW((NodeGrouping{3, {{0, 1}, {1, 2}}}.validate()), UsageError);
  EXPECT_THROW((NodeGrouping{2, {{0, 1}, {}}}.validate()), UsageError);
}

TEST(FixedPool, MeanAndBroadcastMatricesCompose) {
  for (const NodeGrouping& g : keypoints::default_groupings()) {
    // Pooling after broadcasting returns the pooled values: M B = I.
    const Tensor mb = naive_matmul(grouping_mean_matrix(g), grouping_broadcast_matrix(g));
    expect_near(mb, Tensor::identity(g.n_out()), 1e-15);
  }
}
