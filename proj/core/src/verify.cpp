#include "pgnn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

#include "pgnn/diffusion.hpp"
#include "pgnn/models.hpp"
#include "pgnn/nn/grad_check.hpp"
#include "pgnn/nn/ops.hpp"
#include "pgnn/pipeline.hpp"
#include "pgnn/synth.hpp"

namespace pgnn {

namespace {

using nn::ConvGeometry;
using nn::GradCheckOptions;
using nn::GradTarget;
using nn::Shape;
using T = nn::Tensor<double>;

T random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  T t(s);
  for (auto& v : t.span()) v = uniform(rng, lo, hi);
  return t;
}

// Values bounded away from zero so the kink of (leaky) ReLU is never probed.
T off_kink_tensor(Shape s, Rng& rng) {
  T t(s);
  for (auto& v : t.span()) {
    const double m = uniform(rng, 0.05, 1.0);
    v = uniform(rng, 0.0, 1.0) < 0.5 ? -m : m;
  }
  return t;
}

double dot(const T& a, const T& b) {
  return std::inner_product(a.data(), a.data() + a.size(), b.data(), 0.0);
}

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// One probe of an operation: `loss` is sum(r * f(inputs)); `analytic` fills
// the gradient buffers of the targets at the current point.
struct Case {
  std::vector<GradTarget> targets;
  std::function<double()> loss;
};

struct Accumulator {
  const VerifyOptions& options;
  std::vector<VerifyCheck>& out;

  void record(const std::string& op, std::vector<nn::GradCheckResult> results) {
    VerifyCheck c;
    c.name = "grad:" + op;
    c.tolerance = options.grad_tolerance;
    int coords = 0;
    for (const auto& r : results) {
      coords += r.coordinates;
      if (r.max_rel_error >= c.value) {
        c.value = r.max_rel_error;
        c.detail = "worst " + r.worst_target + "[" + std::to_string(r.worst_index) + "] analytic " +
                   g6(r.worst_analytic) + " numeric " + g6(r.worst_numeric);
      }
    }
    c.passed = c.value <= c.tolerance;
    c.detail = std::to_string(coords) + " coordinates; " + c.detail;
    out.push_back(c);
  }

  // Corrupts analytic gradients of the named operation when requested.
  void maybe_fault(const std::string& op, std::vector<std::vector<double>*> grads) const {
    if (options.inject_fault != op) return;
    for (auto* g : grads) {
      for (auto& v : *g) v = v * 1.05 + 1e-3;
    }
  }
};

std::vector<double> to_vec(const T& t) { return {t.data(), t.data() + t.size()}; }

nn::GradCheckResult check(const Case& c, std::uint64_t seed) {
  GradCheckOptions o;
  o.seed = seed;
  o.abs_floor = 1e-6;
  return nn::grad_check(c.loss, c.targets, o);
}

void check_conv2d(Accumulator& acc, Rng& rng) {
  std::vector<nn::GradCheckResult> results;
  struct Geo {
    Shape x;
    int cout, k;
    ConvGeometry g;
  };
  for (const Geo& geo : {Geo{{2, 3, 7, 7}, 4, 3, {2, 1}}, Geo{{2, 3, 5, 5}, 4, 1, {1, 0}}, Geo{{1, 2, 6, 6}, 3, 3, {1, 1}}}) {
    T x = random_tensor(geo.x, rng);
    T w = random_tensor({geo.cout, geo.x.c, geo.k, geo.k}, rng);
    T b = random_tensor({1, geo.cout, 1, 1}, rng);
    T y = nn::conv2d(x, w, &b, geo.g);
    const T r = random_tensor(y.shape(), rng);
    T gx(x.shape()), gw(w.shape()), gb(b.shape());
    nn::conv2d_backward(x, w, r, geo.g, &gx, gw, &gb);
    std::vector<double> ax = to_vec(gx), aw = to_vec(gw), ab = to_vec(gb);
    acc.maybe_fault("conv2d", {&ax, &aw, &ab});
    Case c{{{"x", x.span(), ax}, {"weight", w.span(), aw}, {"bias", b.span(), ab}},
           [&] { return dot(nn::conv2d(x, w, &b, geo.g), r); }};
    results.push_back(check(c, 1));
  }
  acc.record("conv2d", results);
}

void check_conv_transpose2d(Accumulator& acc, Rng& rng) {
  std::vector<nn::GradCheckResult> results;
  for (ConvGeometry g : {ConvGeometry{1, 1}, ConvGeometry{2, 1}}) {
    T x = random_tensor({2, 3, 5, 5}, rng);
    T w = random_tensor({3, 4, 3, 3}, rng);
    T b = random_tensor({1, 4, 1, 1}, rng);
    T y = nn::conv_transpose2d(x, w, &b, g);
    const T r = random_tensor(y.shape(), rng);
    T gx(x.shape()), gw(w.shape()), gb(b.shape());
    nn::conv_transpose2d_backward(x, w, r, g, &gx, gw, &gb);
    std::vector<double> ax = to_vec(gx), aw = to_vec(gw), ab = to_vec(gb);
    acc.maybe_fault("conv_transpose2d", {&ax, &aw, &ab});
    Case c{{{"x", x.span(), ax}, {"weight", w.span(), aw}, {"bias", b.span(), ab}},
           [&] { return dot(nn::conv_transpose2d(x, w, &b, g), r); }};
    results.push_back(check(c, 2));
  }
  acc.record("conv_transpose2d", results);
}

void check_linear(Accumulator& acc, Rng& rng) {
  T x = random_tensor({3, 6, 1, 1}, rng);
  T w = random_tensor({4, 6, 1, 1}, rng);
  T b = random_tensor({1, 4, 1, 1}, rng);
  const T r = random_tensor({3, 4, 1, 1}, rng);
  T gx(x.shape()), gw(w.shape()), gb(b.shape());
  nn::linear_backward(x, w, r, &gx, gw, &gb);
  std::vector<double> ax = to_vec(gx), aw = to_vec(gw), ab = to_vec(gb);
  acc.maybe_fault("linear", {&ax, &aw, &ab});
  Case c{{{"x", x.span(), ax}, {"weight", w.span(), aw}, {"bias", b.span(), ab}},
         [&] { return dot(nn::linear(x, w, &b), r); }};
  acc.record("linear", {check(c, 3)});
}

void check_batchnorm2d(Accumulator& acc, Rng& rng) {
  T x = random_tensor({4, 3, 3, 3}, rng);
  T gamma = random_tensor({1, 3, 1, 1}, rng, 0.5, 1.5);
  T beta = random_tensor({1, 3, 1, 1}, rng);
  auto forward = [&](nn::BatchNormCache<double>* cache) {
    T rm({1, 3, 1, 1}, 0.0), rv({1, 3, 1, 1}, 1.0);
    return nn::batchnorm2d(x, gamma, beta, rm, rv, true, cache);
  };
  nn::BatchNormCache<double> cache;
  const T y = forward(&cache);
  const T r = random_tensor(y.shape(), rng);
  T gg(gamma.shape()), gb(beta.shape());
  const T gx = nn::batchnorm2d_backward(cache, gamma, r, gg, gb);
  std::vector<double> ax = to_vec(gx), ag = to_vec(gg), ab = to_vec(gb);
  acc.maybe_fault("batchnorm2d", {&ax, &ag, &ab});
  Case c{{{"x", x.span(), ax}, {"gamma", gamma.span(), ag}, {"beta", beta.span(), ab}},
         [&] { return dot(forward(nullptr), r); }};
  acc.record("batchnorm2d", {check(c, 4)});
}

void check_activations(Accumulator& acc, Rng& rng) {
  {
    T x = off_kink_tensor({2, 3, 4, 4}, rng);
    const T r = random_tensor(x.shape(), rng);
    std::vector<double> ax = to_vec(nn::leaky_relu_backward(x, r));
    acc.maybe_fault("leaky_relu", {&ax});
    Case c{{{"x", x.span(), ax}}, [&] { return dot(nn::leaky_relu(x), r); }};
    acc.record("leaky_relu", {check(c, 5)});
  }
  {
    T x = off_kink_tensor({2, 3, 4, 4}, rng);
    const T r = random_tensor(x.shape(), rng);
    std::vector<double> ax = to_vec(nn::relu_backward(nn::relu(x), r));
    acc.maybe_fault("relu", {&ax});
    Case c{{{"x", x.span(), ax}}, [&] { return dot(nn::relu(x), r); }};
    acc.record("relu", {check(c, 6)});
  }
  {
    T x = random_tensor({2, 3, 4, 4}, rng);
    const T r = random_tensor(x.shape(), rng);
    std::vector<double> mask;
    Rng drop_rng(7);
    nn::dropout(x, 0.3, true, drop_rng, &mask);
    std::vector<double> ax = to_vec(nn::dropout_backward(mask, r));
    acc.maybe_fault("dropout", {&ax});
    Case c{{{"x", x.span(), ax}}, [&] {
             Rng same(7);
             return dot(nn::dropout<double>(x, 0.3, true, same, nullptr), r);
           }};
    acc.record("dropout", {check(c, 7)});
  }
}

void check_pooling(Accumulator& acc, Rng& rng) {
  {
    // Distinct values 0.01 apart so no probe changes the argmax.
    T x({2, 2, 6, 6});
    std::vector<int> perm(x.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.01 * perm[i];
    std::vector<std::size_t> argmax;
    const T y = nn::max_pool2d(x, 3, {2, 1}, &argmax);
    const T r = random_tensor(y.shape(), rng);
    std::vector<double> ax = to_vec(nn::max_pool2d_backward(x.shape(), argmax, r));
    acc.maybe_fault("max_pool2d", {&ax});
    Case c{{{"x", x.span(), ax}}, [&] { return dot(nn::max_pool2d<double>(x, 3, {2, 1}, nullptr), r); }};
    acc.record("max_pool2d", {check(c, 8)});
  }
  {
    T x = random_tensor({2, 3, 4, 5}, rng);
    const T r = random_tensor({2, 3, 1, 1}, rng);
    std::vector<double> ax = to_vec(nn::global_avg_pool_backward(x.shape(), r));
    acc.maybe_fault("global_avg_pool", {&ax});
    Case c{{{"x", x.span(), ax}}, [&] { return dot(nn::global_avg_pool(x), r); }};
    acc.record("global_avg_pool", {check(c, 9)});
  }
}

void check_basic_block(Accumulator& acc, Rng& rng) {
  nn::ParamStore<double> store;
  BasicBlock<double> block(store, "block", 3, 4, 2);
  Rng init(11);
  block.init(init);
  T x = random_tensor({3, 3, 6, 6}, rng);
  const T y = block.forward(x, nn::Mode::train);
  const T r = random_tensor(y.shape(), rng);
  store.zero_grad();
  std::vector<double> ax = to_vec(block.backward(r));
  auto targets = nn::param_targets(store);
  std::vector<std::vector<double>> grads;
  for (auto& t : targets) grads.emplace_back(t.analytic.begin(), t.analytic.end());
  std::vector<std::vector<double>*> ptrs{&ax};
  for (auto& g : grads) ptrs.push_back(&g);
  acc.maybe_fault("basic_block", ptrs);
  for (std::size_t i = 0; i < targets.size(); ++i) targets[i].analytic = grads[i];
  targets.push_back({"x", x.span(), ax});
  Case c{targets, [&] { return dot(block.forward(x, nn::Mode::train), r); }};
  acc.record("basic_block", {check(c, 10)});
}

void check_inverse_net(Accumulator& acc, Rng& rng) {
  InverseNetConfig cfg;
  cfg.dropout = 0.0;
  InverseNet<double> net(cfg, 12);
  T z = random_tensor({2, 3, 8, 8}, rng, 0.0, 1.0);
  net.params().zero_grad();
  T grad;
  physics_loss(net.forward(z, nn::Mode::train), &grad);
  std::vector<double> az = to_vec(net.backward(grad, true));
  auto targets = nn::param_targets(net.params());
  std::vector<std::vector<double>> grads;
  for (auto& t : targets) grads.emplace_back(t.analytic.begin(), t.analytic.end());
  std::vector<std::vector<double>*> ptrs{&az};
  for (auto& g : grads) ptrs.push_back(&g);
  acc.maybe_fault("inverse_net", ptrs);
  for (std::size_t i = 0; i < targets.size(); ++i) targets[i].analytic = grads[i];
  targets.push_back({"z", z.span(), az});
  Case c{targets, [&] { return physics_loss(net.forward(z, nn::Mode::train)); }};
  acc.record("inverse_net_physics_loss", {check(c, 12)});
}

void check_regressor(Accumulator& acc, Rng& rng) {
  RegressorNet<double> net(RegressorConfig{}, 13);
  // The output layer is zero-initialized; give it weights so every gradient
  // path below it is exercised.
  nn::fill_uniform(net.params().at("fusion.fc2.weight").value, 0.5, rng);
  T x = random_tensor({3, 3, 12, 12}, rng);
  const std::vector<double> y{0.2, -0.4, 1.1};
  auto loss_of = [&](std::vector<double>* grad) {
    const T out = net.forward_raw(x, nn::Mode::train);
    std::vector<double> preds(out.span().begin(), out.span().end());
    return grad ? supervised_loss(preds, y, *grad) : supervised_loss(preds, y);
  };
  net.params().zero_grad();
  std::vector<double> g(3);
  loss_of(&g);
  std::vector<double> ax = to_vec(net.backward(T({3, 1, 1, 1}, std::vector<double>(g)), true));
  auto targets = nn::param_targets(net.params());
  std::vector<std::vector<double>> grads;
  for (auto& t : targets) grads.emplace_back(t.analytic.begin(), t.analytic.end());
  std::vector<std::vector<double>*> ptrs{&ax};
  for (auto& gr : grads) ptrs.push_back(&gr);
  acc.maybe_fault("regressor_net", ptrs);
  for (std::size_t i = 0; i < targets.size(); ++i) targets[i].analytic = grads[i];
  targets.push_back({"x", x.span(), ax});
  Case c{targets, [&] { return loss_of(nullptr); }};
  acc.record("regressor_net_mse", {check(c, 13)});
}

VerifyCheck solver_check() {
  VerifyCheck c{"solver:fourier_vs_fd", false, 0.0, 2e-2, ""};
  Rng rng(mix_seed(2024, 1));
  const GridSpec grid{64, 64};
  for (int s = 0; s < 3; ++s) {
    const DiffusionScenario sc = sample_scenario(rng, ScenarioRanges{});
    const MoistureField a = solve_fourier(sc, grid);
    const MoistureField b = solve_fd_oracle(sc, grid);
    for (std::size_t k = 0; k < a.values().size(); ++k) c.value = std::max(c.value, std::abs(a.values()[k] - b.values()[k]));
  }
  c.passed = c.value <= c.tolerance;
  c.detail = "sup-norm over 3 seeded 64x64 scenarios";
  return c;
}

VerifyCheck colormap_check() {
  VerifyCheck c{"colormap:round_trip", false, 0.0, 0.5 / 255.0 + 1e-9, ""};
  Rng rng(mix_seed(2024, 2));
  MoistureField f(GridSpec{25, 40});
  for (auto& v : f.values()) v = uniform(rng, 0.0, 1.0);
  const MoistureField back = invert_colormap(render_colormap(f, ColormapSpec{}), ColormapSpec{});
  for (std::size_t k = 0; k < f.values().size(); ++k) c.value = std::max(c.value, std::abs(back.values()[k] - f.values()[k]));
  c.passed = c.value <= c.tolerance;
  c.detail = "1000 uniform values";
  return c;
}

VerifyCheck harmonic_check() {
  VerifyCheck c{"physics_loss:harmonic_zero", false, 0.0, 1e-10, ""};
  nn::Tensor<double> t({2, 3, 16, 16});
  for (int n = 0; n < 2; ++n) {
    for (int ch = 0; ch < 3; ++ch) {
      for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) t.at(n, ch, i, j) = n == 0 ? 0.3 + 0.1 * ch : 0.01 * (ch + 1) * i * j;
      }
    }
  }
  c.value = physics_loss(t);
  c.passed = c.value <= c.tolerance;
  c.detail = "constant and bilinear batch";
  return c;
}

}  // namespace

std::vector<std::string> fault_targets() {
  return {"conv2d",     "conv_transpose2d", "linear",      "batchnorm2d", "leaky_relu",   "relu",
          "dropout",    "max_pool2d",       "global_avg_pool", "basic_block", "inverse_net", "regressor_net"};
}

std::vector<VerifyCheck> run_gradient_checks(const VerifyOptions& options) {
  std::vector<VerifyCheck> out;
  Accumulator acc{options, out};
  Rng rng(mix_seed(2024, 0));
  check_conv2d(acc, rng);
  check_conv_transpose2d(acc, rng);
  check_linear(acc, rng);
  check_batchnorm2d(acc, rng);
  check_activations(acc, rng);
  check_pooling(acc, rng);
  check_basic_block(acc, rng);
  check_inverse_net(acc, rng);
  check_regressor(acc, rng);
  return out;
}

std::vector<VerifyCheck> run_verification(const VerifyOptions& options) {
  auto out = run_gradient_checks(options);
  out.push_back(solver_check());
  out.push_back(colormap_check());
  out.push_back(harmonic_check());
  return out;
}

}  // namespace pgnn
