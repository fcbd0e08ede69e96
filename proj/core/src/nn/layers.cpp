#include "pgnn/nn/layers.hpp"

#include <cmath>

namespace pgnn::nn {

template <typename T>
void fill_uniform(Tensor<T>& t, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = T(dist(rng));
}

// Conv2d ---------------------------------------------------------------------

template <typename T>
Conv2dLayer<T>::Conv2dLayer(ParamStore<T>& store, const std::string& name, int cin, int cout, int kernel,
                            ConvGeometry g, bool with_bias)
    : g_(g) {
  weight_ = &store.add(name + ".weight", Shape{cout, cin, kernel, kernel});
  if (with_bias) bias_ = &store.add(name + ".bias", Shape{1, cout, 1, 1});
}

template <typename T>
void Conv2dLayer<T>::init(Rng& rng) {
  const Shape s = weight_->value.shape();
  fill_uniform(weight_->value, std::sqrt(6.0 / (s.c * s.h * s.w)), rng);
  if (bias_) bias_->value.fill(T(0));
}

template <typename T>
Tensor<T> Conv2dLayer<T>::forward(const Tensor<T>& x, bool keep_input) {
  auto y = conv2d(x, weight_->value, bias_ ? &bias_->value : nullptr, g_);
  if (keep_input) input_ = x;
  return y;
}

template <typename T>
Tensor<T> Conv2dLayer<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  Tensor<T> dx;
  conv2d_backward(input_, weight_->value, grad_out, g_, need_input_grad ? &dx : nullptr, weight_->grad,
                  bias_ ? &bias_->grad : nullptr);
  weight_->has_grad = true;
  if (bias_) bias_->has_grad = true;
  return dx;
}

// ConvTranspose2d ------------------------------------------------------------

template <typename T>
ConvTranspose2dLayer<T>::ConvTranspose2dLayer(ParamStore<T>& store, const std::string& name, int cin, int cout,
                                              int kernel, ConvGeometry g, bool with_bias)
    : g_(g) {
  weight_ = &store.add(name + ".weight", Shape{cin, cout, kernel, kernel});
  if (with_bias) bias_ = &store.add(name + ".bias", Shape{1, cout, 1, 1});
}

template <typename T>
void ConvTranspose2dLayer<T>::init(Rng& rng) {
  const Shape s = weight_->value.shape();
  fill_uniform(weight_->value, std::sqrt(6.0 / (s.n * s.h * s.w)), rng);
  if (bias_) bias_->value.fill(T(0));
}

template <typename T>
Tensor<T> ConvTranspose2dLayer<T>::forward(const Tensor<T>& x, bool keep_input) {
  auto y = conv_transpose2d(x, weight_->value, bias_ ? &bias_->value : nullptr, g_);
  if (keep_input) input_ = x;
  return y;
}

template <typename T>
Tensor<T> ConvTranspose2dLayer<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  Tensor<T> dx;
  conv_transpose2d_backward(input_, weight_->value, grad_out, g_, need_input_grad ? &dx : nullptr, weight_->grad,
                            bias_ ? &bias_->grad : nullptr);
  weight_->has_grad = true;
  if (bias_) bias_->has_grad = true;
  return dx;
}

// BatchNorm2d ----------------------------------------------------------------

template <typename T>
BatchNorm2dLayer<T>::BatchNorm2dLayer(ParamStore<T>& store, const std::string& name, int channels) {
  const Shape s{1, channels, 1, 1};
  gamma_ = &store.add(name + ".gamma", s, T(1));
  beta_ = &store.add(name + ".beta", s, T(0));
  running_mean_ = &store.add_buffer(name + ".running_mean", s, T(0));
  running_var_ = &store.add_buffer(name + ".running_var", s, T(1));
}

template <typename T>
Tensor<T> BatchNorm2dLayer<T>::forward(const Tensor<T>& x, Mode mode) {
  return batchnorm2d(x, gamma_->value, beta_->value, running_mean_->value, running_var_->value,
                     mode == Mode::train, &cache_);
}

template <typename T>
Tensor<T> BatchNorm2dLayer<T>::backward(const Tensor<T>& grad_out) {
  auto dx = batchnorm2d_backward(cache_, gamma_->value, grad_out, gamma_->grad, beta_->grad);
  gamma_->has_grad = true;
  beta_->has_grad = true;
  return dx;
}

// Pointwise ------------------------------------------------------------------

template <typename T>
Tensor<T> LeakyReluLayer<T>::forward(const Tensor<T>& x) {
  input_ = x;
  return leaky_relu(x);
}

template <typename T>
Tensor<T> LeakyReluLayer<T>::backward(const Tensor<T>& grad_out) {
  return leaky_relu_backward(input_, grad_out);
}

template <typename T>
Tensor<T> ReluLayer<T>::forward(const Tensor<T>& x) {
  output_ = relu(x);
  return output_;
}

template <typename T>
Tensor<T> ReluLayer<T>::backward(const Tensor<T>& grad_out) {
  return relu_backward(output_, grad_out);
}

template <typename T>
Tensor<T> DropoutLayer<T>::forward(const Tensor<T>& x, Mode mode, Rng& rng) {
  return dropout(x, p_, mode == Mode::train, rng, &mask_);
}

template <typename T>
Tensor<T> DropoutLayer<T>::backward(const Tensor<T>& grad_out) {
  return dropout_backward(mask_, grad_out);
}

// Dense ----------------------------------------------------------------------

template <typename T>
LinearLayer<T>::LinearLayer(ParamStore<T>& store, const std::string& name, int in, int out) {
  weight_ = &store.add(name + ".weight", Shape{out, in, 1, 1});
  bias_ = &store.add(name + ".bias", Shape{1, out, 1, 1});
}

template <typename T>
void LinearLayer<T>::init(Rng& rng, bool fan_in_scaled) {
  const double fan_in = weight_->value.shape().c;
  fill_uniform(weight_->value, fan_in_scaled ? 1.0 / std::sqrt(fan_in) : std::sqrt(6.0 / fan_in), rng);
  bias_->value.fill(T(0));
}

template <typename T>
Tensor<T> LinearLayer<T>::forward(const Tensor<T>& x) {
  input_ = x;
  return linear(x, weight_->value, &bias_->value);
}

template <typename T>
Tensor<T> LinearLayer<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> dx;
  linear_backward(input_, weight_->value, grad_out, &dx, weight_->grad, &bias_->grad);
  weight_->has_grad = true;
  bias_->has_grad = true;
  return dx;
}

template <typename T>
Tensor<T> GlobalAvgPoolLayer<T>::forward(const Tensor<T>& x) {
  input_ = x.shape();
  return global_avg_pool(x);
}

template <typename T>
Tensor<T> GlobalAvgPoolLayer<T>::backward(const Tensor<T>& grad_out) {
  return global_avg_pool_backward(input_, grad_out);
}

template <typename T>
Tensor<T> MaxPool2dLayer<T>::forward(const Tensor<T>& x) {
  input_ = x.shape();
  return max_pool2d(x, kernel_, g_, &argmax_);
}

template <typename T>
Tensor<T> MaxPool2dLayer<T>::backward(const Tensor<T>& grad_out) {
  return max_pool2d_backward(input_, argmax_, grad_out);
}

#define PGNN_INSTANTIATE_LAYERS(T)                              \
  template void fill_uniform(Tensor<T>&, double, Rng&);         \
  template class Conv2dLayer<T>;                                \
  template class ConvTranspose2dLayer<T>;                       \
  template class BatchNorm2dLayer<T>;                           \
  template class LeakyReluLayer<T>;                             \
  template class ReluLayer<T>;                                  \
  template class DropoutLayer<T>;                               \
  template class LinearLayer<T>;                                \
  template class GlobalAvgPoolLayer<T>;                         \
  template class MaxPool2dLayer<T>;

PGNN_INSTANTIATE_LAYERS(float)
PGNN_INSTANTIATE_LAYERS(double)

#undef PGNN_INSTANTIATE_LAYERS

}  // namespace pgnn::nn
