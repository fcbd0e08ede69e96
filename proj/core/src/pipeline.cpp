#include "pgnn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "pgnn/errors.hpp"
#include "pgnn/nn/adam.hpp"

namespace pgnn {

using nn::Mode;
using nn::Shape;
using nn::Tensor;

void TrainConfig::validate() const {
  if (epochs < 1) throw ParameterError("epochs must be >= 1");
  if (window_lo < 1 || window_hi > epochs || window_lo > window_hi) {
    throw ParameterError("evaluation window [" + std::to_string(window_lo) + "," + std::to_string(window_hi) +
                         "] must lie inside [1," + std::to_string(epochs) + "]");
  }
  if (!(lr_inverse > 0.0) || !(lr_regressor > 0.0)) throw ParameterError("learning rates must be positive");
  if (batch_size < 1) throw ParameterError("batch size must be >= 1");
  if (!(fidelity_weight >= 0.0)) throw ParameterError("fidelity weight must be non-negative");
}

template <typename T>
double physics_loss(const Tensor<T>& x_hat, Tensor<T>* grad) {
  const Shape s = x_hat.shape();
  if (s.h < 3 || s.w < 3) throw DimensionError("physics loss needs fields of at least 3x3, got " + s.str());
  const double count = static_cast<double>(s.n) * s.c * (s.h - 2) * (s.w - 2);
  if (grad) *grad = Tensor<T>(s);
  double total = 0.0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * s.plane();
      const T* f = x_hat.data() + base;
      T* g = grad ? grad->data() + base : nullptr;
      for (int i = 1; i < s.h - 1; ++i) {
        for (int j = 1; j < s.w - 1; ++j) {
          const std::size_t p = static_cast<std::size_t>(i) * s.w + j;
          const double lap = static_cast<double>(f[p + s.w]) + f[p - s.w] + f[p + 1] + f[p - 1] - 4.0 * f[p];
          total += lap * lap;
          if (g) {
            const T d = T(2.0 * lap / count);
            g[p + s.w] += d;
            g[p - s.w] += d;
            g[p + 1] += d;
            g[p - 1] += d;
            g[p] -= T(4) * d;
          }
        }
      }
    }
  }
  return total / count;
}

template double physics_loss(const Tensor<float>&, Tensor<float>*);
template double physics_loss(const Tensor<double>&, Tensor<double>*);

double supervised_loss(std::span<const double> preds, std::span<const double> targets, std::span<double> grad) {
  if (preds.empty()) throw DimensionError("supervised loss of an empty batch");
  if (preds.size() != targets.size()) throw DimensionError("prediction and target counts differ");
  if (!grad.empty() && grad.size() != preds.size()) throw DimensionError("gradient buffer has the wrong length");
  const auto n = static_cast<double>(preds.size());
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - targets[i];
    total += e * e;
    if (!grad.empty()) grad[i] = 2.0 * e / n;
  }
  return total / n;
}

Tensor<float> grayscale(const Tensor<float>& rgb, int channels) {
  const Shape s = rgb.shape();
  if (s.c != 3) throw DimensionError("grayscale expects 3 channels, got " + s.str());
  Tensor<float> out(Shape{s.n, channels, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    const float* r = rgb.sample_ptr(n);
    const float* g = r + s.plane();
    const float* b = g + s.plane();
    for (std::size_t p = 0; p < s.plane(); ++p) {
      const float y = 0.299f * r[p] + 0.587f * g[p] + 0.114f * b[p];
      for (int c = 0; c < channels; ++c) out.sample_ptr(n)[c * s.plane() + p] = y;
    }
  }
  return out;
}

Tensor<float> images_to_tensor(std::span<const RgbImage* const> images) {
  if (images.empty()) throw DimensionError("no images to convert");
  const int h = images.front()->height;
  const int w = images.front()->width;
  Tensor<float> out(Shape{static_cast<int>(images.size()), 3, h, w});
  for (std::size_t n = 0; n < images.size(); ++n) {
    const RgbImage& img = *images[n];
    if (img.height != h || img.width != w) throw DimensionError("images in a batch must share extents");
    float* dst = out.sample_ptr(static_cast<int>(n));
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (std::size_t p = 0; p < plane; ++p) {
      for (int c = 0; c < 3; ++c) dst[c * plane + p] = static_cast<float>(img.pixels[p * 3 + c]) / 255.0f;
    }
  }
  return out;
}

Tensor<float> images_to_tensor(std::span<const RgbImage> images) {
  std::vector<const RgbImage*> ptrs;
  ptrs.reserve(images.size());
  for (const auto& img : images) ptrs.push_back(&img);
  return images_to_tensor(std::span<const RgbImage* const>(ptrs));
}

void clip_unit(Tensor<float>& t) {
  for (auto& v : t.span()) v = std::clamp(v, 0.0f, 1.0f);
}

namespace {

std::vector<int> iota_indices(int n) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

// Contiguous sample ranges [lo, hi) processed in eval mode.
template <typename F>
void for_chunks(int n, int chunk, F&& f) {
  for (int lo = 0; lo < n; lo += chunk) f(lo, std::min(n, lo + chunk));
}

Tensor<float> slice(const Tensor<float>& t, int lo, int hi) {
  std::vector<int> idx(static_cast<std::size_t>(hi - lo));
  std::iota(idx.begin(), idx.end(), lo);
  return t.gather(idx);
}

}  // namespace

InverseTrainResult train_inverse(const Tensor<float>& images, const TrainConfig& config, const InverseNetConfig& net) {
  config.validate();
  if (images.shape().n < 1) throw DimensionError("train_inverse needs at least one image");
  InverseTrainResult result{InverseNet<float>(net, mix_seed(config.seed, 11)), {}};
  auto& model = result.model;
  auto adam = nn::make_adam_state(model.params(), nn::AdamHyper{config.lr_inverse});
  Rng order_rng(mix_seed(config.seed, 12));
  auto order = iota_indices(images.shape().n);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(config.batch_size));
      const Tensor<float> z = images.gather(std::span<const int>(order.data() + lo, hi - lo));
      model.params().zero_grad();
      const Tensor<float> x_hat = model.forward(z, Mode::train);
      Tensor<float> grad;
      double loss = physics_loss(x_hat, &grad);
      if (config.fidelity_weight > 0.0) {
        const Tensor<float> gray = grayscale(z, x_hat.shape().c);
        const double scale = config.fidelity_weight / static_cast<double>(x_hat.size());
        double fid = 0.0;
        for (std::size_t i = 0; i < x_hat.size(); ++i) {
          const double d = static_cast<double>(x_hat[i]) - gray[i];
          fid += d * d;
          grad[i] += static_cast<float>(2.0 * scale * d);
        }
        loss += scale * fid;
      }
      model.backward(grad);
      nn::adam_step(model.params(), adam);
      epoch_loss += loss;
      ++batches;
    }
    result.loss_trace.push_back(epoch_loss / batches);
  }
  return result;
}

Tensor<float> apply_inverse(InverseNet<float>& model, const Tensor<float>& z, int chunk) {
  const Shape s = z.shape();
  Tensor<float> out(Shape{s.n, model.config().out_channels, s.h, s.w});
  for_chunks(s.n, chunk, [&](int lo, int hi) {
    const Tensor<float> y = model.forward(slice(z, lo, hi), Mode::eval);
    std::copy(y.data(), y.data() + y.size(), out.sample_ptr(lo));
  });
  clip_unit(out);
  return out;
}

std::vector<double> predict_batched(RegressorNet<float>& model, const Tensor<float>& x, int chunk) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(x.shape().n));
  for_chunks(x.shape().n, chunk, [&](int lo, int hi) {
    const auto p = model.predict(slice(x, lo, hi), Mode::eval);
    out.insert(out.end(), p.begin(), p.end());
  });
  return out;
}

RegressorTrainResult train_regressor(const Tensor<float>& inputs, std::span<const double> labels,
                                     const Tensor<float>& test_inputs, std::span<const double> test_labels,
                                     const TrainConfig& config, const RegressorConfig& net) {
  config.validate();
  const int n = inputs.shape().n;
  if (n < 1) throw DimensionError("train_regressor needs at least one sample");
  if (static_cast<std::size_t>(n) != labels.size()) throw DimensionError("input and label counts differ");
  if (static_cast<std::size_t>(test_inputs.shape().n) != test_labels.size()) {
    throw DimensionError("test input and label counts differ");
  }

  RegressorTrainResult result{RegressorNet<float>(net, mix_seed(config.seed, 21)), {}, {}, {}};
  auto& model = result.model;

  const double mean = std::accumulate(labels.begin(), labels.end(), 0.0) / n;
  double var = 0.0;
  for (double y : labels) var += (y - mean) * (y - mean);
  const double sd = std::sqrt(var / n);
  const double scale = sd > 1e-12 ? sd : 1.0;
  model.set_target_scaling(mean, scale);
  std::vector<double> standardized(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) standardized[i] = (labels[i] - mean) / scale;

  auto adam = nn::make_adam_state(model.params(), nn::AdamHyper{config.lr_regressor});
  Rng order_rng(mix_seed(config.seed, 22));
  auto order = iota_indices(n);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(config.batch_size));
      const std::span<const int> batch(order.data() + lo, hi - lo);
      const Tensor<float> x = inputs.gather(batch);
      std::vector<double> target(batch.size());
      for (std::size_t k = 0; k < batch.size(); ++k) target[k] = standardized[static_cast<std::size_t>(batch[k])];

      model.params().zero_grad();
      const Tensor<float> raw = model.forward_raw(x, Mode::train);
      std::vector<double> preds(raw.span().begin(), raw.span().end());
      std::vector<double> grad(preds.size());
      epoch_loss += supervised_loss(preds, target, grad);
      ++batches;
      Tensor<float> g(raw.shape());
      for (std::size_t k = 0; k < grad.size(); ++k) g[k] = static_cast<float>(grad[k]);
      model.backward(g);
      nn::adam_step(model.params(), adam);
    }
    result.train_loss.push_back(epoch_loss / batches);

    if (epoch >= config.window_lo && epoch <= config.window_hi && !test_labels.empty()) {
      const auto preds = predict_batched(model, test_inputs);
      result.window_trace.push_back({epoch, compute_metrics(preds, test_labels)});
    }
  }
  std::vector<Metrics> rows;
  for (const auto& e : result.window_trace) rows.push_back(e.test);
  if (!rows.empty()) result.windowed = mean_metrics(rows);
  return result;
}

std::vector<double> predict_direct(RegressorNet<float>& direct, const Tensor<float>& z) {
  return predict_batched(direct, z);
}

std::vector<double> predict_inverse(InverseNet<float>& inverse, RegressorNet<float>& regressor, const Tensor<float>& z) {
  return predict_batched(regressor, apply_inverse(inverse, z));
}

std::vector<double> predict_inverse(const InverseMap& inverse, const FieldRegressor& regressor, const Tensor<float>& z) {
  Tensor<float> x_hat = inverse(z);
  if (x_hat.shape().n != z.shape().n) throw DimensionError("inverse stage changed the batch size");
  clip_unit(x_hat);
  return regressor(x_hat);
}

std::vector<std::pair<long, int>> stratum_allocation(std::span<const double> labels, int train_size) {
  const auto n = static_cast<long>(labels.size());
  if (train_size < 0 || train_size >= n) {
    throw ParameterError("train size " + std::to_string(train_size) + " must be below the sample count " +
                         std::to_string(n));
  }
  std::map<long, int> sizes;
  for (double y : labels) ++sizes[static_cast<long>(std::floor(y))];

  struct Quota {
    long key;
    int size;
    long base;
    long remainder;  // numerator of the fractional part, denominator n
  };
  std::vector<Quota> quotas;
  long assigned = 0;
  for (const auto& [key, size] : sizes) {
    const long num = static_cast<long>(train_size) * size;
    quotas.push_back({key, size, num / n, num % n});
    assigned += num / n;
  }
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (quotas[a].remainder != quotas[b].remainder) return quotas[a].remainder > quotas[b].remainder;
    if (quotas[a].size != quotas[b].size) return quotas[a].size > quotas[b].size;
    return quotas[a].key < quotas[b].key;
  });
  for (std::size_t k = 0; assigned < train_size; ++k, ++assigned) ++quotas[order[k]].base;

  std::vector<std::pair<long, int>> out;
  for (const auto& q : quotas) out.emplace_back(q.key, static_cast<int>(q.base));
  return out;
}

Split stratified_split(std::span<const double> labels, int train_size, std::uint64_t seed) {
  const auto allocation = stratum_allocation(labels, train_size);
  std::map<long, std::vector<int>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    members[static_cast<long>(std::floor(labels[i]))].push_back(static_cast<int>(i));
  }
  Split split;
  split.degenerate = train_size < static_cast<int>(members.size());
  Rng rng(seed);
  for (const auto& [key, count] : allocation) {
    auto& idx = members.at(key);
    std::shuffle(idx.begin(), idx.end(), rng);
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + count);
    split.test.insert(split.test.end(), idx.begin() + count, idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace pgnn
