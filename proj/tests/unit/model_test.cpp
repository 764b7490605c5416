#include <gtest/gtest.h>

#include <random>

#include "dag/backbone.hpp"
#include "dag/errors.hpp"
#include "dag/gradcheck.hpp"
#include "dag/graph.hpp"
#include "dag/ops.hpp"
#include "dag/signal.hpp"
#include "dag/transform.hpp"
#include "oracles.hpp"

using namespace dag;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.values()) v = u(rng);
  return t;
}

// Coordinates whose map position stays at least 0.51 cells from any integer.
Tensor off_grid_points(std::size_t n, std::size_t stride, std::size_t cells, std::mt19937_64& rng) {
  Tensor t({n, 2});
  std::uniform_int_distribution<std::size_t> cell(0, cells - 2);
  std::uniform_real_distribution<double> frac(0.3, 0.7);
  for (double& v : t.values()) v = (static_cast<double>(cell(rng)) + frac(rng) + 0.5) * static_cast<double>(stride);
  return t;
}

}  // namespace

TEST(Conv2d, MatchesLoopOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t c = 1 + trial % 3, o = 2 + trial % 2, h = 5 + trial % 4, w = 4 + trial % 5;
    const std::size_t stride = 1 + trial % 2;
    const bool rectify = trial % 3 == 0;
    Tensor in = random_tensor({c, h, w}, rng), k = random_tensor({o, c, 3, 3}, rng), b = random_tensor({o}, rng);
    Tape tape;
    Var out = conv2d(tape.constant(in), tape.constant(k), tape.constant(b), stride,
                     rectify ? ConvActivation::relu : ConvActivation::none);
    EXPECT_LT(max_abs_diff(out.value(), oracle::conv2d(in, k, b, stride, rectify)), 1e-10);
  }
}

TEST(Conv2d, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(6);
  for (std::size_t stride : {1u, 2u}) {
    Parameter in("in", random_tensor({2, 6, 5}, rng)), k("k", random_tensor({3, 2, 3, 3}, rng)), b("b", random_tensor({3}, rng));
    std::vector<Parameter*> params{&in, &k, &b};
    Tensor weights = random_tensor({3, (6 - 1) / stride + 1, (5 - 1) / stride + 1}, rng);
    auto loss = [&](Tape& t) {
      return sum_all(mul_constant(conv2d(t.parameter(in), t.parameter(k), t.parameter(b), stride, ConvActivation::relu), weights));
    };
    EXPECT_LT(finite_difference_check(loss, params), 1e-4) << "stride " << stride;
  }
}

TEST(Conv2d, RejectsBadShapes) {
  Tape tape;
  Var in = tape.constant(Tensor({2, 4, 4}));
  EXPECT_THROW(conv2d(in, tape.constant(Tensor({1, 3, 3, 3})), tape.constant(Tensor({1})), 1), ContractViolation);
  EXPECT_THROW(conv2d(in, tape.constant(Tensor({1, 2, 3, 3})), tape.constant(Tensor({2})), 1), ContractViolation);
  EXPECT_THROW(conv2d(in, tape.constant(Tensor({1, 2, 3, 3})), tape.constant(Tensor({1})), 3), ContractViolation);
}

TEST(Backbone, StrideFourOutput) {
  BackboneParams p = init_backbone(8, 1);
  Image img(16, 24, 0.5);
  Tape tape;
  FeatureMap f = extract_features(tape, img, p);
  EXPECT_EQ(f.channels(), 8u);
  EXPECT_EQ(f.height(), 4u);
  EXPECT_EQ(f.width(), 6u);
  EXPECT_THROW(extract_features(tape, Image(18, 24), p), ContractViolation);
}

TEST(GraphConv, MatchesLoopOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 5, in = 3 + trial % 4, out = 2 + trial % 3;
    GcnBlockParams block = make_gcn_block("b", in, out, rng);
    block.bias.value = random_tensor({out}, rng);
    Tensor f = random_tensor({n, in}, rng), e = random_tensor({n, n}, rng);
    Tape tape;
    Var r = graph_conv(tape, tape.constant(f), tape.constant(e), block);
    EXPECT_LT(max_abs_diff(r.value(), oracle::graph_conv(f, e, block.self_weight.value, block.neighbor_weight.value,
                                                         block.bias.value)),
              1e-10);
  }
}

TEST(GraphConv, ResidualBlockAndStackGradients) {
  std::mt19937_64 rng(8);
  GcnStackParams stack = make_gcn_stack("s", 5, 4, 2, rng);
  for (auto& blk : stack.blocks) blk.bias.value = random_tensor({4}, rng, -0.2, 0.2);
  Parameter signal("signal", random_tensor({3, 5}, rng));
  Parameter adjacency = init_adjacency(3);
  adjacency.value = random_tensor({3, 3}, rng);
  std::vector<Parameter*> params = stack.parameters();
  params.push_back(&signal);
  params.push_back(&adjacency);
  Tensor weights = random_tensor({3, 4}, rng);
  auto loss = [&](Tape& t) {
    std::vector<Var> layers = gcn_stack(t, t.parameter(signal), t.parameter(adjacency), stack);
    Var acc = sum_all(mul_constant(layers.back(), weights));
    for (const Var& l : layers) acc = add(acc, scale(sum_all(l), 0.1));
    return acc;
  };
  EXPECT_LT(finite_difference_check(loss, params), 1e-4);
}

TEST(GraphConv, StackReturnsOneLayerPerBlockPlusInput) {
  std::mt19937_64 rng(9);
  GcnStackParams stack = make_gcn_stack("s", 6, 8, 4, rng);
  Parameter adjacency = init_adjacency(5);
  Tape tape;
  auto layers = gcn_stack(tape, tape.constant(Tensor({5, 6}, 0.1)), tape.parameter(adjacency), stack);
  ASSERT_EQ(layers.size(), 5u);
  for (const Var& l : layers) EXPECT_EQ(l.shape(), (Shape{5, 8}));
}

TEST(Adjacency, UniformInitAndRowSums) {
  Parameter e = init_adjacency(16);
  for (std::size_t i = 0; i < 16; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 16; ++j) {
      EXPECT_EQ(e.value(i, j), 1.0 / 16.0);
      row += e.value(i, j);
    }
    EXPECT_NEAR(row, 1.0, 1e-12);
  }
  EXPECT_THROW(init_adjacency(1), ContractViolation);
}

TEST(Adjacency, TopEdges) {
  Tensor e = Tensor::matrix({{9, 1, -3, 2}, {0.5, 9, 0.5, 0.1}, {1, 1, 9, 1}, {0, -4, 4, 9}});
  std::vector<Edge> edges = top_edges(e, 2);
  ASSERT_EQ(edges.size(), 8u);
  EXPECT_EQ(edges[0], (Edge{0, 2, -3}));
  EXPECT_EQ(edges[1], (Edge{0, 3, 2}));
  EXPECT_EQ(edges[2], (Edge{1, 0, 0.5}));
  EXPECT_EQ(edges[3], (Edge{1, 2, 0.5}));
  EXPECT_EQ(edges[4], (Edge{2, 0, 1}));
  EXPECT_EQ(edges[5], (Edge{2, 1, 1}));
  EXPECT_EQ(edges[6], (Edge{3, 1, -4}));
  EXPECT_EQ(edges[7], (Edge{3, 2, 4}));
  EXPECT_THROW(top_edges(e, 4), ContractViolation);
  EXPECT_THROW(top_edges(e, 0), ContractViolation);
  EXPECT_EQ(top_edges(init_adjacency(16).value, 3).size(), 48u);
}

TEST(Bilinear, MatchesLoopOracle) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> coord(-6.0, 30.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + trial % 4, h = 3 + trial % 3, w = 4 + trial % 2, stride = 1 + trial % 4;
    Tensor map = random_tensor({d, h, w}, rng);
    Tensor pts({5, 2});
    for (double& v : pts.values()) v = coord(rng);
    Tape tape;
    FeatureMap fm{tape.constant(map), stride};
    const Tensor got = bilinear_sample(fm, tape.constant(pts)).value();
    for (std::size_t i = 0; i < 5; ++i) {
      const std::vector<double> want = oracle::bilinear(map, stride, {pts(i, 0), pts(i, 1)});
      for (std::size_t c = 0; c < d; ++c) EXPECT_NEAR(got(i, c), want[c], 1e-10);
    }
  }
}

TEST(Bilinear, CellCenterHitsExactValue) {
  Tensor map({1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  Tape tape;
  FeatureMap fm{tape.constant(map), 4};
  // Cell (1, 0) center sits at image point (6, 2).
  EXPECT_EQ(bilinear_sample(fm, tape.constant(Tensor::matrix({{6, 2}}))).value()[0], 2.0);
}

TEST(Bilinear, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(12);
  Parameter map("map", random_tensor({3, 5, 6}, rng));
  Parameter pts("pts", off_grid_points(4, 4, 5, rng));
  std::vector<Parameter*> params{&map, &pts};
  Tensor weights = random_tensor({4, 3}, rng);
  auto loss = [&](Tape& t) {
    FeatureMap fm{t.parameter(map), 4};
    return sum_all(mul_constant(bilinear_sample(fm, t.parameter(pts)), weights));
  };
  EXPECT_LT(finite_difference_check(loss, params), 1e-4);
}

TEST(Bilinear, ClampedCoordinateHasZeroGradient) {
  Parameter map("map", Tensor({1, 3, 3}, 1.0));
  Parameter pts("pts", Tensor::matrix({{-10.0, 5.0}}));
  pts.zero_grad();
  Tape tape;
  FeatureMap fm{tape.parameter(map), 4};
  tape.backward(sum_all(bilinear_sample(fm, tape.parameter(pts))));
  EXPECT_EQ(pts.grad(0, 0), 0.0);
}

TEST(ShapeFeature, DisplacementLayout) {
  Tape tape;
  Var v = tape.constant(Tensor::matrix({{0, 0}, {1, 2}, {4, 8}}));
  EXPECT_EQ(shape_feature(v).value(), Tensor::matrix({{1, 2, 4, 8}, {-1, -2, 3, 6}, {-4, -8, -3, -6}}));
}

TEST(ShapeFeature, TranslationInvariantAndDifferentiable) {
  std::mt19937_64 rng(13);
  Parameter pts("pts", random_tensor({4, 2}, rng, 0.0, 50.0));
  Tape tape;
  Tensor shifted = pts.value;
  for (std::size_t i = 0; i < 4; ++i) shifted(i, 0) += 7.0, shifted(i, 1) -= 3.0;
  EXPECT_LT(max_abs_diff(shape_feature(tape.constant(pts.value)).value(), shape_feature(tape.constant(shifted)).value()), 1e-12);
  Tensor weights = random_tensor({4, 6}, rng);
  std::vector<Parameter*> params{&pts};
  auto loss = [&](Tape& t) { return sum_all(mul_constant(shape_feature(t.parameter(pts)), weights)); };
  EXPECT_LT(finite_difference_check(loss, params), 1e-4);
}

TEST(GraphSignal, WidthsAndScaling) {
  Tape tape;
  FeatureMap fm{tape.constant(Tensor({5, 4, 4}, 0.25)), 4};
  Var v = tape.constant(Tensor::matrix({{2, 2}, {10, 6}, {6, 14}}));
  Var full = build_graph_signal(fm, v, 2.0);
  EXPECT_EQ(full.shape(), (Shape{3, 9}));
  EXPECT_EQ(full.value()(0, 5), 4.0);  // (10 - 2) / 2
  EXPECT_EQ(build_graph_signal(fm, v, 2.0, false).shape(), (Shape{3, 5}));
}

TEST(Perspective, ApplyMatchesOracleAndComposition) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  for (int trial = 0; trial < 20; ++trial) {
    PerspectiveTransform a, b;
    for (double& v : a.m) v += u(rng);
    for (double& v : b.m) v += u(rng) * 10;
    const Point2 p{u(rng) * 1000, u(rng) * 1000};
    const Point2 want = oracle::apply_homography(a.m.data(), p);
    const Point2 got = a.apply(p);
    EXPECT_NEAR(got.x, want.x, 1e-10);
    EXPECT_NEAR(got.y, want.y, 1e-10);
    const Point2 chained = a.apply(b.apply(p));
    const Point2 composed = (a * b).apply(p);
    EXPECT_NEAR(chained.x, composed.x, 1e-9);
    EXPECT_NEAR(chained.y, composed.y, 1e-9);
  }
  const Point2 q{3.5, -2.0};
  EXPECT_EQ(PerspectiveTransform::identity().apply(q), q);
}

TEST(Perspective, DegenerateDenominatorThrows) {
  PerspectiveTransform t;
  t.m = {1, 0, 0, 0, 1, 0, 1, 0, 0};
  EXPECT_THROW(t.apply({0.0, 3.0}), DegenerateTransform);
  Tape tape;
  Var m = tape.constant(Tensor({1, 9}, std::vector<double>(t.m.begin(), t.m.end())));
  EXPECT_THROW(apply_perspective(m, tape.constant(Tensor::matrix({{0.0, 3.0}}))), DegenerateTransform);
}

TEST(Perspective, AffineHasUnitDenominator) {
  const std::vector<double> theta{2, 0, 1, 0, 3, -1};
  PerspectiveTransform t = vector_to_affine(theta);
  EXPECT_EQ(t.m[6], 0.0);
  EXPECT_EQ(t.m[7], 0.0);
  EXPECT_EQ(t.m[8], 1.0);
  EXPECT_EQ(t.apply({1, 1}), (Point2{3, 2}));
}

TEST(Perspective, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(15);
  Parameter m("m", Tensor({1, 9}, std::vector<double>{1.1, 0.1, 3, -0.2, 0.9, -2, 0.01, -0.02, 1.0}));
  Parameter pts("pts", random_tensor({5, 2}, rng, 1.0, 10.0));
  std::vector<Parameter*> params{&m, &pts};
  Tensor weights = random_tensor({5, 2}, rng);
  auto loss = [&](Tape& t) {
    Var out = apply_perspective(t.parameter(m), t.parameter(pts));
    for (std::size_t i = 0; i < 5; ++i) {
      const double r = 0.01 * pts.value(i, 0) - 0.02 * pts.value(i, 1) + 1.0;
      EXPECT_GT(std::abs(r), 0.1);
    }
    return sum_all(mul_constant(out, weights));
  };
  EXPECT_LT(finite_difference_check(loss, params), 1e-4);
}

TEST(Readout, IdentityAtInitAndGradients) {
  std::mt19937_64 rng(16);
  for (TransformKind kind : {TransformKind::perspective, TransformKind::affine}) {
    ReadoutHeadParams head = make_readout_head("h", 2 * 3, 5, kind, 64.0, 48.0, rng);
    Parameter l0("l0", random_tensor({4, 3}, rng)), l1("l1", random_tensor({4, 3}, rng));
    Tape tape;
    std::vector<Var> layers{tape.parameter(l0), tape.parameter(l1)};
    const Tensor theta = gin_readout(tape, layers, head).value();
    const std::vector<double> eye{1, 0, 0, 0, 1, 0, 0, 0, 1};
    ASSERT_EQ(theta.size(), head.out_dim());
    for (std::size_t i = 0; i < theta.size(); ++i) EXPECT_EQ(theta[i], eye[i]);

    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (double& v : head.output.weight.value.values()) v = u(rng);
    std::vector<Parameter*> params = head.parameters();
    params.push_back(&l0);
    params.push_back(&l1);
    Tensor weights = random_tensor({1, head.out_dim()}, rng);
    auto loss = [&](Tape& t) {
      std::vector<Var> ls{t.parameter(l0), t.parameter(l1)};
      return sum_all(mul_constant(gin_readout(t, ls, head), weights));
    };
    EXPECT_LT(finite_difference_check(loss, params), 1e-4);
  }
}

TEST(Readout, PermutationInvariant) {
  std::mt19937_64 rng(17);
  ReadoutHeadParams head = make_readout_head("h", 3, 4, TransformKind::perspective, 32.0, 32.0, rng);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (double& v : head.output.weight.value.values()) v = u(rng);
  Tensor f = random_tensor({4, 3}, rng), g({4, 3});
  const std::size_t perm[4] = {2, 0, 3, 1};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t c = 0; c < 3; ++c) g(i, c) = f(perm[i], c);
  Tape tape;
  std::vector<Var> a{tape.constant(f)}, b{tape.constant(g)};
  EXPECT_LT(max_abs_diff(gin_readout(tape, a, head).value(), gin_readout(tape, b, head).value()), 1e-12);
}
