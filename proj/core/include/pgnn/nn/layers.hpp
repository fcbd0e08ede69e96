#pragma once

#include <string>
#include <vector>

#include "pgnn/nn/ops.hpp"
#include "pgnn/nn/params.hpp"
#include "pgnn/random.hpp"

namespace pgnn::nn {

enum class Mode { train, eval };

/// Uniform(-bound, bound) fill.
template <typename T>
void fill_uniform(Tensor<T>& t, double bound, Rng& rng);

// Layers own no tensors of their own: parameters live in the model's
// ParamStore and layers keep whatever forward state backward needs.

template <typename T>
class Conv2dLayer {
 public:
  Conv2dLayer() = default;
  Conv2dLayer(ParamStore<T>& store, const std::string& name, int cin, int cout, int kernel, ConvGeometry g,
              bool with_bias);

  /// He-uniform weights (fan-in cin*k*k), zero bias.
  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, bool keep_input = true);
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true);

 private:
  Param<T>* weight_ = nullptr;
  Param<T>* bias_ = nullptr;
  ConvGeometry g_;
  Tensor<T> input_;
};

template <typename T>
class ConvTranspose2dLayer {
 public:
  ConvTranspose2dLayer() = default;
  ConvTranspose2dLayer(ParamStore<T>& store, const std::string& name, int cin, int cout, int kernel, ConvGeometry g,
                       bool with_bias);

  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& x, bool keep_input = true);
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad = true);

 private:
  Param<T>* weight_ = nullptr;
  Param<T>* bias_ = nullptr;
  ConvGeometry g_;
  Tensor<T> input_;
};

template <typename T>
class BatchNorm2dLayer {
 public:
  BatchNorm2dLayer() = default;
  BatchNorm2dLayer(ParamStore<T>& store, const std::string& name, int channels);

  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  Tensor<T> backward(const Tensor<T>& grad_out);

 private:
  Param<T>* gamma_ = nullptr;
  Param<T>* beta_ = nullptr;
  Param<T>* running_mean_ = nullptr;
  Param<T>* running_var_ = nullptr;
  BatchNormCache<T> cache_;
};

template <typename T>
class LeakyReluLayer {
 public:
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);

 private:
  Tensor<T> input_;
};

template <typename T>
class ReluLayer {
 public:
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);

 private:
  Tensor<T> output_;
};

template <typename T>
class DropoutLayer {
 public:
  explicit DropoutLayer(double p = 0.0) : p_(p) {}

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng& rng);
  Tensor<T> backward(const Tensor<T>& grad_out);
  double probability() const { return p_; }

 private:
  double p_;
  std::vector<T> mask_;
};

template <typename T>
class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(ParamStore<T>& store, const std::string& name, int in, int out);

  /// He-uniform weights for layers feeding a rectifier; `fan_in_scaled`
  /// uses bound 1/sqrt(fan_in) instead (output layers). Zero bias.
  void init(Rng& rng, bool fan_in_scaled = false);
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);

 private:
  Param<T>* weight_ = nullptr;
  Param<T>* bias_ = nullptr;
  Tensor<T> input_;
};

template <typename T>
class GlobalAvgPoolLayer {
 public:
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);

 private:
  Shape input_;
};

template <typename T>
class MaxPool2dLayer {
 public:
  MaxPool2dLayer(int kernel = 3, ConvGeometry g = {2, 1}) : kernel_(kernel), g_(g) {}

  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);

 private:
  int kernel_;
  ConvGeometry g_;
  Shape input_;
  std::vector<std::size_t> argmax_;
};

}  // namespace pgnn::nn
