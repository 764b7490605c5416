#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "dag/checkpoint.hpp"
#include "dag/config.hpp"
#include "dag/errors.hpp"
#include "dag/training.hpp"
#include "oracles.hpp"

using namespace dag;
namespace fs = std::filesystem;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.image_width = 32;
  c.image_height = 32;
  c.feature_channels = 4;
  c.hidden_width = 8;
  c.head_hidden = 8;
  c.local_steps = 1;
  return c;
}

SynthParams small_synth() {
  SynthParams p;
  p.width = 32;
  p.height = 32;
  p.max_translation = 2.0;
  return p;
}

std::unique_ptr<DagModel> small_model(const std::vector<SampleRecord>& train_set, ModelConfig c = small_config()) {
  std::vector<LandmarkSet> shapes;
  for (const auto& r : train_set) shapes.push_back(r.landmarks);
  return std::make_unique<DagModel>(c, compute_mean_shape(shapes, 32, 32));
}

std::vector<char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST(Schedule, StepDecay) {
  EXPECT_EQ(lr_at(0, 1e-4), 1e-4);
  EXPECT_EQ(lr_at(99, 1e-4), 1e-4);
  EXPECT_NEAR(lr_at(100, 1e-4), 1e-5, 1e-20);
  EXPECT_NEAR(lr_at(250, 1.0, 100, 0.5), 0.25, 1e-15);
}

TEST(Adam, ZeroGradientAndPenaltyLeaveParametersUnchanged) {
  Parameter p("p", Tensor::row({1.0, -2.0}));
  p.zero_grad();
  std::vector<Parameter*> params{&p};
  OptimizerState s = make_optimizer(params, AdamConfig{0.9, 0.999, 1e-8, 0.0});
  adam_step(params, s, 0.1);
  EXPECT_EQ(p.value, Tensor::row({1.0, -2.0}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter p("p", Tensor::row({0.0}));
  p.grad = Tensor::row({1.0});
  std::vector<Parameter*> params{&p};
  OptimizerState s = make_optimizer(params, AdamConfig{0.9, 0.999, 1e-8, 0.0});
  adam_step(params, s, 0.1);
  EXPECT_NEAR(p.value[0], -0.1, 1e-8);
}

TEST(Adam, MatchesEquationReplay) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + trial % 6;
    Tensor init({n});
    for (double& v : init.values()) v = u(rng);
    Parameter p("p", init);
    std::vector<Parameter*> params{&p};
    OptimizerState s = make_optimizer(params);
    oracle::AdamReplay replay{0.01};
    std::vector<double> theta(init.values().begin(), init.values().end());
    for (int step = 0; step < 5; ++step) {
      // Quadratic 0.5 * |theta - 0.3|^2.
      p.grad = Tensor({n});
      std::vector<double> g(n);
      for (std::size_t i = 0; i < n; ++i) p.grad[i] = g[i] = p.value[i] - 0.3;
      adam_step(params, s, 0.01);
      replay.step(theta, g);
    }
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(p.value[i], theta[i], 1e-12);
  }
}

TEST(Adam, PenaltyShrinksNormWithoutDataGradient) {
  Parameter p("p", Tensor::row({3.0, -4.0, 0.5}));
  std::vector<Parameter*> params{&p};
  OptimizerState s = make_optimizer(params);
  auto norm = [&] { return std::hypot(p.value[0], p.value[1], p.value[2]); };
  double last = norm();
  for (int k = 0; k < 10; ++k) {
    p.zero_grad();
    adam_step(params, s, 0.01);
    EXPECT_LT(norm(), last);
    last = norm();
  }
}

TEST(Adam, MaskedEntriesStayFixedAndMissingGradientThrows) {
  Parameter p("p", Tensor::row({0.0, 1.0}));
  p.train_mask = Tensor::row({0.0, 1.0});
  p.grad = Tensor::row({5.0, 5.0});
  std::vector<Parameter*> params{&p};
  OptimizerState s = make_optimizer(params);
  adam_step(params, s, 0.1);
  EXPECT_EQ(p.value[0], 0.0);
  EXPECT_LT(p.value[1], 1.0);
  p.grad = Tensor();
  EXPECT_THROW(adam_step(params, s, 0.1), ContractViolation);
}

TEST(Train, ZeroEpochsLeavesModelUnchanged) {
  auto tr = generate_split(1, 0, 4, small_synth()), va = generate_split(1, 1, 2, small_synth());
  auto model = small_model(tr);
  std::vector<Tensor> before;
  for (Parameter* p : model->parameters()) before.push_back(p->value);
  TrainConfig tc;
  tc.epochs = 0;
  TrainResult res = train(*model, tr, va, tc);
  EXPECT_TRUE(res.log.empty());
  auto params = model->parameters();
  for (std::size_t k = 0; k < params.size(); ++k) EXPECT_EQ(params[k]->value, before[k]);
  EXPECT_EQ(format_log_csv(res.log), "epoch,lr,train_loss,val_nme\n");
}

TEST(Train, FirstBatchLossMatchesReplay) {
  auto tr = generate_split(2, 0, 1, small_synth()), va = generate_split(2, 1, 1, small_synth());
  auto model = small_model(tr);
  auto replay = small_model(tr);
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 1;
  tc.augment = false;
  TrainResult res = train(*model, tr, va, tc);
  ASSERT_EQ(res.log.size(), 1u);
  EXPECT_TRUE(std::isfinite(res.log[0].train_loss));
  EXPECT_EQ(res.log[0].train_loss, dataset_loss(*replay, tr));
}

TEST(Train, SelfModeKeepsOffDiagonalsAtZero) {
  auto tr = generate_split(3, 0, 4, small_synth()), va = generate_split(3, 1, 2, small_synth());
  ModelConfig c = small_config();
  c.connectivity = ConnectivityMode::self;
  auto model = small_model(tr, c);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 2;
  tc.base_lr = 1e-2;
  train(*model, tr, va, tc);
  const Tensor& e = model->adjacency.value;
  bool diagonal_moved = false;
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) {
      if (i != j) EXPECT_EQ(e(i, j), 0.0);
      else diagonal_moved = diagonal_moved || e(i, j) != 1.0 / 16.0;
    }
  EXPECT_TRUE(diagonal_moved);
}

TEST(Train, DeterministicAcrossRuns) {
  auto tr = generate_split(4, 0, 6, small_synth()), va = generate_split(4, 1, 2, small_synth());
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 3;
  tc.base_lr = 1e-3;
  auto a = small_model(tr), b = small_model(tr);
  TrainResult ra = train(*a, tr, va, tc), rb = train(*b, tr, va, tc);
  EXPECT_EQ(format_log_csv(ra.log), format_log_csv(rb.log));
  auto pa = a->parameters(), pb = b->parameters();
  for (std::size_t k = 0; k < pa.size(); ++k) EXPECT_EQ(pa[k]->value, pb[k]->value);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const fs::path dir = fs::temp_directory_path() / "dag_ckpt_test";
  fs::create_directories(dir);
  auto tr = generate_split(5, 0, 4, small_synth()), va = generate_split(5, 1, 3, small_synth());
  auto model = small_model(tr);
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 2;
  tc.base_lr = 1e-3;
  TrainResult res = train(*model, tr, va, tc);
  save_checkpoint(dir / "a.ckpt", *model, res.best_state, CheckpointMeta{res.best_epoch, 5});
  LoadedCheckpoint back = load_checkpoint(dir / "a.ckpt");
  save_checkpoint(dir / "b.ckpt", *back.model, back.state, back.meta);
  EXPECT_EQ(file_bytes(dir / "a.ckpt"), file_bytes(dir / "b.ckpt"));
  EXPECT_EQ(mean_nme(predict_records(*model, va)), mean_nme(predict_records(*back.model, va)));
  EXPECT_EQ(back.state.step, res.best_state.step);
  EXPECT_EQ(back.meta.dataset_seed, 5u);

  const std::vector<char> bytes = file_bytes(dir / "a.ckpt");
  {
    std::ofstream out(dir / "short.ckpt", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 100));
  }
  try {
    load_checkpoint(dir / "short.ckpt");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), bytes.size() - 100);
  }
  fs::remove_all(dir);
}

TEST(Checkpoint, VersionMismatchIsIncompatible) {
  const fs::path dir = fs::temp_directory_path() / "dag_ckpt_version";
  fs::create_directories(dir);
  auto tr = generate_split(6, 0, 2, small_synth());
  auto model = small_model(tr);
  save_checkpoint(dir / "a.ckpt", *model, make_optimizer(model->parameters()), {});
  std::vector<char> bytes = file_bytes(dir / "a.ckpt");
  bytes[7] = '2';
  {
    std::ofstream out(dir / "v2.ckpt", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  EXPECT_THROW(load_checkpoint(dir / "v2.ckpt"), IncompatibleCheckpoint);
  fs::remove_all(dir);
}

TEST(Config, DefaultsRoundTripAndUnknownKeysRejected) {
  RunConfig c;
  nlohmann::json j = c;
  RunConfig back = j.get<RunConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(j["model"]["local_steps"], 3);
  EXPECT_EQ(j["model"]["gcn_blocks"], 4);
  EXPECT_EQ(j["model"]["transform"], "perspective");
  EXPECT_EQ(j["train"]["batch_size"], 8);

  RunConfig patched;
  merge_config(patched, nlohmann::json::parse(R"({"model": {"connectivity": "self"}, "train": {"epochs": 3}})"));
  EXPECT_EQ(patched.model.connectivity, ConnectivityMode::self);
  EXPECT_EQ(patched.train.epochs, 3u);
  EXPECT_EQ(patched.train.batch_size, 8u);

  EXPECT_THROW(merge_config(patched, nlohmann::json::parse(R"({"model": {"layers": 3}})")), ConfigError);
  EXPECT_THROW(merge_config(patched, nlohmann::json::parse(R"({"extra": 1})")), ConfigError);
  EXPECT_THROW(merge_config(patched, nlohmann::json::parse(R"({"train": {"epochs": -1}})")), ConfigError);
  EXPECT_THROW(merge_config(patched, nlohmann::json::parse(R"({"model": {"transform": "rigid"}})")), ConfigError);
  RunConfig mismatch;
  mismatch.model.image_width = 64;
  EXPECT_THROW(mismatch.validate(), ConfigError);
}
