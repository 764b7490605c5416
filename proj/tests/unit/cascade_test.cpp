#include <gtest/gtest.h>

#include <random>
#include <set>

#include "dag/cascade.hpp"
#include "dag/errors.hpp"
#include "dag/gradcheck.hpp"
#include "dag/ops.hpp"

using namespace dag;

namespace {

ModelConfig toy_config() {
  ModelConfig c;
  c.landmarks = 3;
  c.image_width = 16;
  c.image_height = 16;
  c.feature_channels = 4;
  c.hidden_width = 6;
  c.head_hidden = 5;
  c.local_steps = 2;
  return c;
}

LandmarkSet toy_mean() { return LandmarkSet{{{5.3, 6.1}, {10.7, 5.6}, {8.2, 10.9}}}; }

Image toy_image(std::uint64_t seed) {
  Image img(16, 16);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : img.pixels) v = u(rng);
  return img;
}

}  // namespace

TEST(Cascade, MeanShapeIsCentered) {
  std::vector<LandmarkSet> shapes{LandmarkSet{{{0, 0}, {2, 0}}}, LandmarkSet{{{2, 2}, {4, 2}}}};
  LandmarkSet mean = compute_mean_shape(shapes, 10, 20);
  EXPECT_DOUBLE_EQ(mean[0].x + mean[1].x, 10.0);
  EXPECT_DOUBLE_EQ(mean[0].y + mean[1].y, 20.0);
  EXPECT_DOUBLE_EQ(mean[1].x - mean[0].x, 2.0);
  EXPECT_THROW(compute_mean_shape(std::span<const LandmarkSet>{}, 10, 10), ContractViolation);
  LandmarkSet single = compute_mean_shape(std::span(shapes).first(1), 10, 20);
  EXPECT_DOUBLE_EQ(single[0].x, 4.0);
  EXPECT_DOUBLE_EQ(single[1].x, 6.0);
}

TEST(Cascade, InitialModelLeavesMeanShapeUnmoved) {
  for (TransformKind kind : {TransformKind::perspective, TransformKind::affine}) {
    ModelConfig c = toy_config();
    c.transform = kind;
    DagModel model(c, toy_mean());
    CascadeTrace trace = run_cascade(toy_image(1), model);
    ASSERT_EQ(trace.stages.size(), c.local_steps + 2);
    for (const LandmarkSet& s : trace.stages) EXPECT_EQ(s, model.mean_shape());
    EXPECT_EQ(trace.transform.m, PerspectiveTransform::identity().m);
  }
}

TEST(Cascade, GlobalLossIsHingeOnMeanL1) {
  ModelConfig c = toy_config();
  DagModel model(c, toy_mean());
  const LandmarkSet truth{{{6.0, 6.0}, {11.0, 4.0}, {7.0, 12.0}}};
  Tape tape;
  CascadeForward fwd = forward_cascade(tape, toy_image(2), model);
  LossTerms terms = cascade_loss(fwd, truth, c);
  double l1 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) l1 += std::abs(toy_mean()[i].x - truth[i].x) + std::abs(toy_mean()[i].y - truth[i].y);
  l1 /= 3.0;
  EXPECT_NEAR(terms.global.value()[0], std::max(0.0, l1 - 0.15 * 16), 1e-12);
  EXPECT_NEAR(terms.local.value()[0], l1, 1e-12);
  EXPECT_NEAR(terms.total.value()[0], terms.global.value()[0] + terms.local.value()[0], 1e-12);
}

TEST(Cascade, ConnectivityModes) {
  ModelConfig c = toy_config();
  c.connectivity = ConnectivityMode::self;
  DagModel self(c, toy_mean());
  EXPECT_EQ(self.adjacency.value(0, 1), 0.0);
  EXPECT_EQ(self.adjacency.value(0, 0), 1.0 / 3.0);
  ASSERT_TRUE(self.adjacency.train_mask.has_value());
  EXPECT_EQ((*self.adjacency.train_mask)(0, 1), 0.0);
  c.connectivity = ConnectivityMode::uniform;
  DagModel uniform(c, toy_mean());
  EXPECT_FALSE(uniform.adjacency.trainable);
  c.connectivity = ConnectivityMode::learned;
  DagModel learned(c, toy_mean());
  EXPECT_TRUE(learned.adjacency.trainable);
  EXPECT_FALSE(learned.adjacency.train_mask.has_value());
}

TEST(Cascade, ParameterNamesAreUnique) {
  DagModel model(toy_config(), toy_mean());
  std::set<std::string> names;
  for (Parameter* p : model.parameters()) EXPECT_TRUE(names.insert(p->name).second) << p->name;
}

TEST(Cascade, RejectsWrongImageSize) {
  DagModel model(toy_config(), toy_mean());
  Tape tape;
  EXPECT_THROW(forward_cascade(tape, Image(8, 8), model), ContractViolation);
  EXPECT_THROW(DagModel(toy_config(), LandmarkSet{{{1, 1}}}), ContractViolation);
}

TEST(Cascade, LossesGradientsMatchFiniteDifferences) {
  Parameter pred("pred", Tensor::matrix({{1.0, 2.0}, {3.5, -1.0}}));
  const LandmarkSet truth{{{0.2, 2.7}, {4.9, -3.0}}};
  std::vector<Parameter*> params{&pred};
  for (double margin : {0.5, 10.0}) {
    auto loss = [&](Tape& t) {
      Var p = t.parameter(pred);
      return loss_total(loss_global(p, truth, margin), loss_local(p, truth), 0.7, 1.3);
    };
    EXPECT_LT(finite_difference_check(loss, params), 1e-4);
  }
}
