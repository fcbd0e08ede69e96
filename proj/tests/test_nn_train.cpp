#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "pgnn/errors.hpp"
#include "pgnn/nn/adam.hpp"
#include "pgnn/nn/grad_check.hpp"
#include "pgnn/nn/layers.hpp"

namespace pgnn::nn {
namespace {

Tensor<double> random_tensor(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> t(s);
  for (auto& v : t.span()) v = uniform(rng, -1.0, 1.0);
  return t;
}

double weighted_sum(const Tensor<double>& y, const Tensor<double>& r) {
  return std::inner_product(y.span().begin(), y.span().end(), r.span().begin(), 0.0);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamStore<double> store;
  auto& p = store.add("w", Shape{1, 1, 1, 1}, 0.5);
  auto state = make_adam_state(store, AdamHyper{0.001});
  p.grad[0] = 1.0;
  p.has_grad = true;
  adam_step(store, state);
  EXPECT_NEAR(p.value[0], 0.5 - 0.001, 1e-9);
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ParamStore<float> store;
  auto& p = store.add("w", Shape{1, 3, 2, 2}, 0.25f);
  auto state = make_adam_state(store, AdamHyper{});
  for (int k = 0; k < 3; ++k) {
    store.zero_grad();
    p.has_grad = true;
    adam_step(store, state);
  }
  for (float v : p.value.span()) EXPECT_EQ(v, 0.25f);
  EXPECT_EQ(state.step, 3);
}

TEST(Adam, MissingGradientIsContractError) {
  ParamStore<float> store;
  store.add("w", Shape{1, 1, 1, 1});
  store.add_buffer("running", Shape{1, 1, 1, 1});
  auto state = make_adam_state(store, AdamHyper{});
  EXPECT_THROW(adam_step(store, state), ContractError);
  store[0].has_grad = true;
  EXPECT_NO_THROW(adam_step(store, state));
  store.zero_grad();
  EXPECT_THROW(adam_step(store, state), ContractError);
}

TEST(Adam, BuffersAreNotUpdated) {
  ParamStore<double> store;
  auto& w = store.add("w", Shape{1, 1, 1, 1}, 1.0);
  auto& b = store.add_buffer("stat", Shape{1, 1, 1, 1}, 7.0);
  auto state = make_adam_state(store, AdamHyper{});
  w.grad[0] = 1.0;
  w.has_grad = true;
  adam_step(store, state);
  EXPECT_EQ(b.value[0], 7.0);
  EXPECT_EQ(store.trainable_count(), 1u);
  EXPECT_EQ(store.buffer_count(), 1u);
}

TEST(Adam, QuadraticConverges) {
  ParamStore<double> store;
  auto& p = store.add("w", Shape{1, 1, 1, 1}, 3.0);
  auto state = make_adam_state(store, AdamHyper{0.05});
  for (int k = 0; k < 2000; ++k) {
    p.grad[0] = 2.0 * (p.value[0] - 1.0);
    p.has_grad = true;
    adam_step(store, state);
  }
  EXPECT_NEAR(p.value[0], 1.0, 1e-3);
}

TEST(ParamStore, NamesAreUnique) {
  ParamStore<float> store;
  store.add("a", Shape{1, 1, 1, 1});
  EXPECT_THROW(store.add("a", Shape{1, 1, 1, 1}), ContractError);
  EXPECT_THROW(store.at("missing"), ContractError);
  EXPECT_EQ(store.find("missing"), nullptr);
  EXPECT_EQ(store.at("a").grad.shape(), (Shape{1, 1, 1, 1}));
}

TEST(GradCheck, Linear) {
  auto x = random_tensor({3, 5, 1, 1}, 1);
  auto w = random_tensor({4, 5, 1, 1}, 2);
  auto b = random_tensor({1, 4, 1, 1}, 3);
  const auto r = random_tensor({3, 4, 1, 1}, 4);
  auto loss = [&] { return weighted_sum(linear(x, w, &b), r); };
  Tensor<double> gx(x.shape());
  Tensor<double> gw(w.shape());
  Tensor<double> gb(b.shape());
  linear_backward(x, w, r, &gx, gw, &gb);
  const std::vector<GradTarget> targets{{"x", x.span(), gx.span()}, {"w", w.span(), gw.span()}, {"b", b.span(), gb.span()}};
  EXPECT_LE(grad_check(loss, targets).max_rel_error, 1e-7);
}

TEST(GradCheck, Conv3x3) {
  auto x = random_tensor({2, 3, 6, 6}, 5);
  auto w = random_tensor({4, 3, 3, 3}, 6);
  auto b = random_tensor({1, 4, 1, 1}, 7);
  const ConvGeometry g{1, 1};
  const auto r = random_tensor({2, 4, 6, 6}, 8);
  auto loss = [&] { return weighted_sum(conv2d(x, w, &b, g), r); };
  Tensor<double> gx(x.shape());
  Tensor<double> gw(w.shape());
  Tensor<double> gb(b.shape());
  conv2d_backward(x, w, r, g, &gx, gw, &gb);
  const std::vector<GradTarget> targets{{"x", x.span(), gx.span()}, {"w", w.span(), gw.span()}, {"b", b.span(), gb.span()}};
  const auto res = grad_check(loss, targets);
  EXPECT_LE(res.max_rel_error, 1e-6);
  EXPECT_EQ(res.coordinates, 200);
}

TEST(GradCheck, DetectsWrongGradient) {
  auto x = random_tensor({1, 4, 1, 1}, 9);
  auto loss = [&] { return 0.5 * weighted_sum(x, x); };
  std::vector<double> wrong(x.span().begin(), x.span().end());
  wrong[2] *= 1.1;
  const std::vector<GradTarget> targets{{"x", x.span(), wrong}};
  const auto res = grad_check(loss, targets);
  EXPECT_GT(res.max_rel_error, 0.05);
  EXPECT_EQ(res.worst_index, 2u);
}

TEST(Layers, ConvLayerAccumulatesGradients) {
  ParamStore<double> store;
  Conv2dLayer<double> conv(store, "c", 2, 3, 3, {1, 1}, true);
  Rng rng(1);
  conv.init(rng);
  const auto x = random_tensor({2, 2, 5, 5}, 2);
  const auto g = random_tensor({2, 3, 5, 5}, 3);
  conv.forward(x);
  conv.backward(g, false);
  const auto once = store.at("c.weight").grad;
  EXPECT_TRUE(store.at("c.weight").has_grad);
  conv.forward(x);
  conv.backward(g, false);
  const auto& twice = store.at("c.weight").grad;
  for (std::size_t k = 0; k < once.size(); ++k) EXPECT_NEAR(twice[k], 2.0 * once[k], 1e-12);
  store.zero_grad();
  EXPECT_FALSE(store.at("c.weight").has_grad);
  EXPECT_EQ(store.at("c.weight").grad[0], 0.0);
}

TEST(Layers, HeUniformInitBoundAndZeroBias) {
  ParamStore<float> store;
  Conv2dLayer<float> conv(store, "c", 16, 32, 3, {1, 1}, true);
  Rng rng(3);
  conv.init(rng);
  const double bound = std::sqrt(6.0 / (16 * 9));
  double max_abs = 0.0;
  for (float v : store.at("c.weight").value.span()) max_abs = std::max(max_abs, double(std::abs(v)));
  EXPECT_LE(max_abs, bound);
  EXPECT_GT(max_abs, 0.9 * bound);
  for (float v : store.at("c.bias").value.span()) EXPECT_EQ(v, 0.0f);
}

TEST(Layers, SameSeedSameTrainingTrajectory) {
  auto run = [] {
    ParamStore<float> store;
    LinearLayer<float> fc(store, "fc", 6, 1);
    Rng rng(42);
    fc.init(rng, true);
    auto state = make_adam_state(store, AdamHyper{0.01});
    Tensor<float> x(Shape{4, 6, 1, 1});
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = float(std::sin(0.3 * k));
    for (int step = 0; step < 10; ++step) {
      store.zero_grad();
      const auto y = fc.forward(x);
      Tensor<float> g(y.shape());
      for (std::size_t k = 0; k < y.size(); ++k) g[k] = 2.0f * (y[k] - 1.0f) / 4.0f;
      fc.backward(g);
      adam_step(store, state);
    }
    return store.at("fc.weight").value;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace pgnn::nn
