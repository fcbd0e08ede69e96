#include <benchmark/benchmark.h>

#include "pgnn/diffusion.hpp"
#include "pgnn/models.hpp"
#include "pgnn/nn/ops.hpp"
#include "pgnn/pipeline.hpp"
#include "pgnn/synth.hpp"

namespace {

using namespace pgnn;
using nn::Shape;
using nn::Tensor;

Tensor<float> random_tensor(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> t(s);
  for (auto& v : t.span()) v = static_cast<float>(uniform(rng, -1.0, 1.0));
  return t;
}

// Args: batch, channels in/out, spatial size. 3x3 kernel, padding 1.
void BM_Conv2dForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int c = static_cast<int>(state.range(1));
  const int s = static_cast<int>(state.range(2));
  const auto x = random_tensor({n, c, s, s}, 1);
  const auto w = random_tensor({c, c, 3, 3}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d<float>(x, w, nullptr, {1, 1}));
  state.SetItemsProcessed(state.iterations() * n * c * c * 9 * s * s);
}
BENCHMARK(BM_Conv2dForward)->Args({8, 16, 64})->Args({8, 32, 32})->Args({8, 64, 16});

void BM_Conv2dBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int c = static_cast<int>(state.range(1));
  const int s = static_cast<int>(state.range(2));
  const auto x = random_tensor({n, c, s, s}, 1);
  const auto w = random_tensor({c, c, 3, 3}, 2);
  const auto g = random_tensor({n, c, s, s}, 3);
  Tensor<float> gx;
  Tensor<float> gw(w.shape());
  for (auto _ : state) {
    nn::conv2d_backward<float>(x, w, g, {1, 1}, &gx, gw, nullptr);
    benchmark::DoNotOptimize(gw.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * c * c * 9 * s * s);
}
BENCHMARK(BM_Conv2dBackward)->Args({8, 16, 64})->Args({8, 32, 32})->Args({8, 64, 16});

void BM_SolveFourier(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  ScenarioRanges ranges;
  ranges.modes = static_cast<int>(state.range(1));
  Rng rng(1);
  const auto s = sample_scenario(rng, ranges);
  for (auto _ : state) benchmark::DoNotOptimize(solve_fourier(s, GridSpec{size, size}));
}
BENCHMARK(BM_SolveFourier)->Args({64, 32})->Args({128, 32})->Args({64, 64})->Unit(benchmark::kMicrosecond);

void BM_SolveFdOracle(benchmark::State& state) {
  ScenarioRanges ranges;
  Rng rng(1);
  const auto s = sample_scenario(rng, ranges);
  for (auto _ : state) benchmark::DoNotOptimize(solve_fd_oracle(s, GridSpec{64, 64}));
}
BENCHMARK(BM_SolveFdOracle)->Unit(benchmark::kMillisecond);

void BM_GenerateSample(benchmark::State& state) {
  GeneratorConfig cfg;
  int index = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_sample(cfg, 1, index++));
}
BENCHMARK(BM_GenerateSample)->Unit(benchmark::kMicrosecond);

void BM_InverseNetTrainStep(benchmark::State& state) {
  InverseNet<float> net(InverseNetConfig{}, 1);
  const auto z = random_tensor({8, 3, 64, 64}, 4);
  for (auto _ : state) {
    net.params().zero_grad();
    const auto x = net.forward(z, nn::Mode::train);
    Tensor<float> grad;
    benchmark::DoNotOptimize(physics_loss(x, &grad));
    net.backward(grad);
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_InverseNetTrainStep)->Unit(benchmark::kMillisecond);

void BM_RegressorPredict(benchmark::State& state) {
  RegressorConfig rc;
  rc.variant = state.range(0) == 0 ? RegressorVariant::resnet_small : RegressorVariant::resnet18;
  RegressorNet<float> net(rc, 1);
  const auto x = random_tensor({8, 3, 64, 64}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(net.predict(x));
  state.SetItemsProcessed(state.iterations() * 8);
  state.SetLabel(to_string(rc.variant));
}
BENCHMARK(BM_RegressorPredict)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
