#include <gtest/gtest.h>

#include <random>

#include "dag/autodiff.hpp"
#include "dag/errors.hpp"
#include "dag/gradcheck.hpp"
#include "dag/ops.hpp"

using namespace dag;

namespace {

Parameter random_param(const std::string& name, Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.values()) v = u(rng);
  return Parameter(name, std::move(t));
}

}  // namespace

TEST(Tensor, ShapeAndAccess) {
  Tensor t = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t(1, 2), 6.0);
  EXPECT_THROW(t.reshape({4, 2}), ContractViolation);
  t.reshape({3, 2});
  EXPECT_EQ(t(2, 1), 6.0);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ContractViolation);
  EXPECT_EQ(Tensor::scalar(3.0).size(), 1u);
}

TEST(Tape, SharedParameterMapsToOneNode) {
  Parameter p("p", Tensor::row({2.0}));
  Tape tape;
  Var a = tape.parameter(p);
  Var b = tape.parameter(p);
  EXPECT_EQ(a.id(), b.id());
  p.zero_grad();
  tape.backward(sum_all(mul(a, b)));
  EXPECT_DOUBLE_EQ(p.grad[0], 4.0);
}

TEST(Tape, GradientsAccumulateAcrossTapes) {
  Parameter p("p", Tensor::row({3.0}));
  p.zero_grad();
  for (int k = 0; k < 2; ++k) {
    Tape tape;
    tape.backward(sum_all(scale(tape.parameter(p), 2.0)));
  }
  EXPECT_DOUBLE_EQ(p.grad[0], 4.0);
}

TEST(Tape, TrainMaskBlocksEntries) {
  Parameter p("p", Tensor::row({1.0, 2.0}));
  p.train_mask = Tensor::row({1.0, 0.0});
  p.zero_grad();
  Tape tape;
  tape.backward(sum_all(tape.parameter(p)));
  EXPECT_EQ(p.grad[0], 1.0);
  EXPECT_EQ(p.grad[1], 0.0);
}

TEST(Tape, FrozenParameterGetsNoGradient) {
  Parameter p("p", Tensor::row({1.0}), false);
  p.zero_grad();
  Tape tape;
  Var v = tape.parameter(p);
  EXPECT_FALSE(tape.requires_grad(v));
  tape.backward(sum_all(scale(v, 5.0)));
  EXPECT_EQ(p.grad[0], 0.0);
}

TEST(Tape, NoGradientTapeTreatsParametersAsConstants) {
  Parameter p("p", Tensor::row({1.0}));
  Tape tape(false);
  EXPECT_FALSE(tape.requires_grad(tape.parameter(p)));
}

TEST(Tape, BackwardNeedsScalar) {
  Parameter p("p", Tensor::row({1.0, 2.0}));
  Tape tape;
  EXPECT_THROW(tape.backward(tape.parameter(p)), ContractViolation);
}

TEST(Ops, ShapeContracts) {
  Tape tape;
  Var a = tape.constant(Tensor({2, 3}));
  Var b = tape.constant(Tensor({2, 2}));
  EXPECT_THROW(matmul(a, a), ContractViolation);
  EXPECT_THROW(add(a, b), ContractViolation);
  EXPECT_THROW(concat(std::span<const Var>{}, 0), ContractViolation);
  EXPECT_THROW(slice(a, 1, 2, 4), ContractViolation);
  std::vector<Var> one{a};
  EXPECT_THROW(elementwise(Elementwise::add, one), ContractViolation);
}

TEST(Ops, ReluAndAbsSubgradientAtZeroIsZero) {
  Parameter p("p", Tensor::row({0.0, 0.0}));
  p.zero_grad();
  Tape tape;
  Var x = tape.parameter(p);
  tape.backward(sum_all(add(relu(x), abs(x))));
  EXPECT_EQ(p.grad[0], 0.0);
  EXPECT_EQ(p.grad[1], 0.0);
}

TEST(Ops, ConcatSliceReduceValues) {
  Tape tape;
  Var a = tape.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  Var b = tape.constant(Tensor::matrix({{5}, {6}}));
  std::vector<Var> parts{a, b};
  Var c = concat(parts, 1);
  EXPECT_EQ(c.value(), Tensor::matrix({{1, 2, 5}, {3, 4, 6}}));
  EXPECT_EQ(slice(c, 1, 1, 3).value(), Tensor::matrix({{2, 5}, {4, 6}}));
  EXPECT_EQ(reduce_sum(c, 0).value(), Tensor::matrix({{4, 6, 11}}));
  EXPECT_EQ(reduce_sum(c, 1).value(), Tensor::matrix({{8}, {13}}));
  EXPECT_EQ(sum_all(c).value()[0], 21.0);
}

TEST(Ops, MatmulMatchesLoop) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Parameter a = random_param("a", {3, 4}, rng), b = random_param("b", {4, 5}, rng);
    Tape tape;
    const Tensor c = matmul(tape.parameter(a), tape.parameter(b)).value();
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < 4; ++k) s += a.value(i, k) * b.value(k, j);
        EXPECT_NEAR(c(i, j), s, 1e-12);
      }
  }
}

TEST(Ops, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(11);
  Parameter a = random_param("a", {3, 4}, rng, 0.2, 1.0);
  Parameter b = random_param("b", {4, 2}, rng);
  Parameter c = random_param("c", {3, 4}, rng, -1.0, -0.2);
  Parameter bias = random_param("bias", {2}, rng);
  std::vector<Parameter*> params{&a, &b, &c, &bias};
  auto loss = [&](Tape& t) {
    Var va = t.parameter(a), vb = t.parameter(b), vc = t.parameter(c);
    Var mixed = add(mul(va, vc), sub(scale(va, 0.5), vc));
    Var h = add_bias(matmul(mixed, vb), t.parameter(bias));
    std::vector<Var> parts{h, relu(add_scalar(h, 0.1)), abs(h)};
    Var cat = concat(parts, 1);
    Var s = reduce_sum(slice(cat, 1, 1, 5), 0);
    return sum_all(mul_constant(reshape(s, {4, 1}), Tensor({4, 1}, std::vector<double>{1, -2, 3, 0.5})));
  };
  EXPECT_LT(finite_difference_check(loss, params), 1e-4);
}
