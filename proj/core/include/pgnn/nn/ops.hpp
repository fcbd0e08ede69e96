#pragma once

#include <vector>

#include "pgnn/nn/tensor.hpp"
#include "pgnn/random.hpp"

namespace pgnn::nn {

struct ConvGeometry {
  int stride = 1;
  int padding = 0;
};

/// Output extent of a convolution along one axis.
int conv_out_extent(int in, int kernel, ConvGeometry g);
/// Output extent of a transposed convolution along one axis.
int conv_transpose_out_extent(int in, int kernel, ConvGeometry g);

// Cross-correlation. weight is (cout, cin, k, k); bias is (1, cout, 1, 1) or null.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias, ConvGeometry g);

// Gradients are accumulated into grad_w / grad_b; grad_x is overwritten when given.
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& grad_out, ConvGeometry g,
                     Tensor<T>* grad_x, Tensor<T>& grad_w, Tensor<T>* grad_b);

// Adjoint of conv2d with respect to its input. weight is (cin, cout, k, k).
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias, ConvGeometry g);

template <typename T>
void conv_transpose2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& grad_out,
                               ConvGeometry g, Tensor<T>* grad_x, Tensor<T>& grad_w, Tensor<T>* grad_b);

inline constexpr double kLeakySlope = 0.01;

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope = T(kLeakySlope));
template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out, T slope = T(kLeakySlope));

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
/// Uses the forward output; y > 0 marks the active set.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& grad_out);

/// Inverted dropout. In train mode each element is zeroed with probability p
/// and survivors are scaled by 1/(1-p); `mask` receives the per-element
/// multiplier. Eval mode is the identity and leaves `mask` empty.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, bool train, Rng& rng, std::vector<T>* mask);
template <typename T>
Tensor<T> dropout_backward(const std::vector<T>& mask, const Tensor<T>& grad_out);

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

template <typename T>
struct BatchNormCache {
  bool train = true;
  Tensor<T> normalized;       // x_hat
  std::vector<T> inv_std;     // per channel
};

/// Per-channel normalization. Train mode uses batch statistics and updates the
/// running estimates (unbiased variance, momentum 0.1); eval mode uses the
/// running estimates.
template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, Tensor<T>& running_mean,
                      Tensor<T>& running_var, bool train, BatchNormCache<T>* cache);

template <typename T>
Tensor<T> batchnorm2d_backward(const BatchNormCache<T>& cache, const Tensor<T>& gamma, const Tensor<T>& grad_out,
                               Tensor<T>& grad_gamma, Tensor<T>& grad_beta);

/// x is (n, in, 1, 1) or any (n, c, h, w) with c*h*w = in; weight is (out, in, 1, 1).
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias);
template <typename T>
void linear_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& grad_out, Tensor<T>* grad_x,
                     Tensor<T>& grad_w, Tensor<T>* grad_b);

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);
template <typename T>
Tensor<T> global_avg_pool_backward(const Shape& input, const Tensor<T>& grad_out);

/// Max pooling with implicit -inf padding. `argmax` receives the flat input
/// index chosen for every output element.
template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x, int kernel, ConvGeometry g, std::vector<std::size_t>* argmax);
template <typename T>
Tensor<T> max_pool2d_backward(const Shape& input, const std::vector<std::size_t>& argmax,
                              const Tensor<T>& grad_out);

/// Elementwise a + b.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace pgnn::nn
