#include <benchmark/benchmark.h>

#include <random>

#include "dag/backbone.hpp"
#include "dag/cascade.hpp"
#include "dag/graph.hpp"
#include "dag/ops.hpp"
#include "dag/signal.hpp"
#include "dag/synth.hpp"
#include "dag/training.hpp"

using namespace dag;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : t.values()) v = u(rng);
  return t;
}

const std::vector<SampleRecord>& samples() {
  static const std::vector<SampleRecord> s = generate_split(7, 0, 8);
  return s;
}

DagModel& model() {
  static DagModel m = [] {
    std::vector<LandmarkSet> shapes;
    for (const SampleRecord& r : samples()) shapes.push_back(r.landmarks);
    return DagModel(ModelConfig{}, compute_mean_shape(shapes, 128, 128));
  }();
  return m;
}

void BM_Conv2d(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  const auto size = static_cast<std::size_t>(state.range(1));
  const Tensor in = random_tensor({channels, size, size}, 1), k = random_tensor({channels, channels, 3, 3}, 2);
  const Tensor b = random_tensor({channels}, 3);
  for (auto _ : state) {
    Tape tape(false);
    benchmark::DoNotOptimize(conv2d(tape.constant(in), tape.constant(k), tape.constant(b), 1, ConvActivation::relu).value().data());
  }
}
BENCHMARK(BM_Conv2d)->Args({16, 128})->Args({64, 32});

void BM_Backbone(benchmark::State& state) {
  BackboneParams params = init_backbone(64, 1);
  const Image& image = samples()[0].image;
  for (auto _ : state) {
    Tape tape(false);
    benchmark::DoNotOptimize(extract_features(tape, image, params).values.value().data());
  }
}
BENCHMARK(BM_Backbone)->Unit(benchmark::kMillisecond);

void BM_GraphConv(benchmark::State& state) {
  std::mt19937_64 rng(4);
  GcnBlockParams block = make_gcn_block("b", 128, 128, rng);
  const Tensor f = random_tensor({16, 128}, 5), e = random_tensor({16, 16}, 6);
  for (auto _ : state) {
    Tape tape(false);
    benchmark::DoNotOptimize(graph_conv(tape, tape.constant(f), tape.constant(e), block).value().data());
  }
}
BENCHMARK(BM_GraphConv);

void BM_BilinearSample(benchmark::State& state) {
  const Tensor map = random_tensor({64, 32, 32}, 7);
  Tensor pts = random_tensor({16, 2}, 8);
  for (double& v : pts.values()) v = 64.0 + 50.0 * v;
  for (auto _ : state) {
    Tape tape(false);
    benchmark::DoNotOptimize(bilinear_sample(FeatureMap{tape.constant(map), 4}, tape.constant(pts)).value().data());
  }
}
BENCHMARK(BM_BilinearSample);

void BM_CascadeForward(benchmark::State& state) {
  const Image& image = samples()[0].image;
  for (auto _ : state) benchmark::DoNotOptimize(run_cascade(image, model()).stages.back().points.data());
}
BENCHMARK(BM_CascadeForward)->Unit(benchmark::kMillisecond);

void BM_CascadeForwardBackward(benchmark::State& state) {
  const SampleRecord& s = samples()[0];
  for (auto _ : state) {
    model().zero_grad();
    Tape tape;
    CascadeForward fwd = forward_cascade(tape, s.image, model());
    tape.backward(cascade_loss(fwd, s.landmarks, model().config()).total);
  }
}
BENCHMARK(BM_CascadeForwardBackward)->Unit(benchmark::kMillisecond);

void BM_GenerateSample(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_sample(sample_seed(7, 0, seed++)).image.pixels.data());
}
BENCHMARK(BM_GenerateSample)->Unit(benchmark::kMillisecond);

void BM_Augment(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(augment(samples()[1], seed++).image.pixels.data());
}
BENCHMARK(BM_Augment)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
