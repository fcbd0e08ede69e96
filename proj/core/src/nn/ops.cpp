#include "pgnn/nn/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <limits>
#include <string>

#include "pgnn/errors.hpp"

namespace pgnn::nn {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

struct ConvPlan {
  int channels;  // channels of the "image" side (conv input / convT output)
  int height;
  int width;
  int kernel;
  ConvGeometry g;
  int out_h;
  int out_w;

  int rows() const { return channels * kernel * kernel; }
  int cols() const { return out_h * out_w; }
  bool identity() const { return kernel == 1 && g.stride == 1 && g.padding == 0; }
};

// (channels*k*k) x (out_h*out_w) patch matrix of one image.
template <typename T>
void im2col(const T* src, const ConvPlan& p, T* col) {
  const int k = p.kernel;
  for (int c = 0; c < p.channels; ++c) {
    const T* plane = src + static_cast<std::size_t>(c) * p.height * p.width;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        T* row = col + static_cast<std::size_t>((c * k + ki) * k + kj) * p.cols();
        for (int oi = 0; oi < p.out_h; ++oi) {
          const int ii = oi * p.g.stride - p.g.padding + ki;
          T* dst = row + static_cast<std::size_t>(oi) * p.out_w;
          if (ii < 0 || ii >= p.height) {
            std::fill_n(dst, p.out_w, T(0));
            continue;
          }
          const T* line = plane + static_cast<std::size_t>(ii) * p.width;
          if (p.g.stride == 1) {
            const int offset = kj - p.g.padding;
            const int lo = std::max(0, -offset);
            const int hi = std::min(p.out_w, p.width - offset);
            std::fill_n(dst, std::max(lo, 0), T(0));
            if (hi > lo) std::copy(line + lo + offset, line + hi + offset, dst + lo);
            for (int oj = std::max(hi, lo); oj < p.out_w; ++oj) dst[oj] = T(0);
          } else {
            for (int oj = 0; oj < p.out_w; ++oj) {
              const int jj = oj * p.g.stride - p.g.padding + kj;
              dst[oj] = (jj >= 0 && jj < p.width) ? line[jj] : T(0);
            }
          }
        }
      }
    }
  }
}

// Scatter-add of a patch matrix back into an image (adjoint of im2col).
template <typename T>
void col2im(const T* col, const ConvPlan& p, T* dst) {
  const int k = p.kernel;
  std::fill_n(dst, static_cast<std::size_t>(p.channels) * p.height * p.width, T(0));
  for (int c = 0; c < p.channels; ++c) {
    T* plane = dst + static_cast<std::size_t>(c) * p.height * p.width;
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const T* row = col + static_cast<std::size_t>((c * k + ki) * k + kj) * p.cols();
        for (int oi = 0; oi < p.out_h; ++oi) {
          const int ii = oi * p.g.stride - p.g.padding + ki;
          if (ii < 0 || ii >= p.height) continue;
          T* line = plane + static_cast<std::size_t>(ii) * p.width;
          const T* srcrow = row + static_cast<std::size_t>(oi) * p.out_w;
          for (int oj = 0; oj < p.out_w; ++oj) {
            const int jj = oj * p.g.stride - p.g.padding + kj;
            if (jj >= 0 && jj < p.width) line[jj] += srcrow[oj];
          }
        }
      }
    }
  }
}

void check_geometry(ConvGeometry g) {
  if (g.stride < 1) throw ParameterError("convolution stride must be >= 1");
  if (g.padding < 0) throw ParameterError("convolution padding must be >= 0");
}

void check_square_kernel(const Shape& w) {
  if (w.h != w.w || w.h < 1) throw DimensionError("convolution kernel must be square, got " + w.str());
}

template <typename T>
void check_bias(const Tensor<T>* bias, int channels) {
  if (bias && bias->size() != static_cast<std::size_t>(channels)) {
    throw DimensionError("bias length does not match output channels");
  }
}

template <typename T>
void add_channel_bias(Tensor<T>& out, const Tensor<T>& bias) {
  const Shape s = out.shape();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      T* p = out.data() + (static_cast<std::size_t>(n) * s.c + c) * s.plane();
      const T b = bias[c];
      for (std::size_t i = 0; i < s.plane(); ++i) p[i] += b;
    }
  }
}

template <typename T>
void accumulate_channel_sums(const Tensor<T>& g, Tensor<T>& grad_b) {
  const Shape s = g.shape();
  for (int c = 0; c < s.c; ++c) {
    T acc = 0;
    for (int n = 0; n < s.n; ++n) {
      const T* p = g.data() + (static_cast<std::size_t>(n) * s.c + c) * s.plane();
      for (std::size_t i = 0; i < s.plane(); ++i) acc += p[i];
    }
    grad_b[c] += acc;
  }
}

}  // namespace

int conv_out_extent(int in, int kernel, ConvGeometry g) {
  return (in + 2 * g.padding - kernel) / g.stride + 1;
}

int conv_transpose_out_extent(int in, int kernel, ConvGeometry g) {
  return (in - 1) * g.stride - 2 * g.padding + kernel;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias, ConvGeometry g) {
  check_geometry(g);
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  check_square_kernel(ws);
  if (ws.c != xs.c) {
    throw DimensionError("conv2d: input has " + std::to_string(xs.c) + " channels, weight expects " +
                         std::to_string(ws.c));
  }
  check_bias(bias, ws.n);
  const ConvPlan p{xs.c, xs.h, xs.w, ws.h, g, conv_out_extent(xs.h, ws.h, g), conv_out_extent(xs.w, ws.h, g)};
  if (p.out_h < 1 || p.out_w < 1) throw DimensionError("conv2d: input " + xs.str() + " smaller than kernel");

  Tensor<T> out(Shape{xs.n, ws.n, p.out_h, p.out_w});
  std::vector<T> col(p.identity() ? 0 : static_cast<std::size_t>(p.rows()) * p.cols());
  const ConstMatMap<T> w(weight.data(), ws.n, p.rows());
  for (int n = 0; n < xs.n; ++n) {
    const T* patches = x.sample_ptr(n);
    if (!p.identity()) {
      im2col(x.sample_ptr(n), p, col.data());
      patches = col.data();
    }
    MatMap<T> y(out.sample_ptr(n), ws.n, p.cols());
    y.noalias() = w * ConstMatMap<T>(patches, p.rows(), p.cols());
  }
  if (bias) add_channel_bias(out, *bias);
  return out;
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& grad_out, ConvGeometry g,
                     Tensor<T>* grad_x, Tensor<T>& grad_w, Tensor<T>* grad_b) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  const ConvPlan p{xs.c, xs.h, xs.w, ws.h, g, conv_out_extent(xs.h, ws.h, g), conv_out_extent(xs.w, ws.h, g)};
  require_same_shape(grad_out.shape(), Shape{xs.n, ws.n, p.out_h, p.out_w}, "conv2d_backward grad_out");
  require_same_shape(grad_w.shape(), ws, "conv2d_backward grad_w");

  if (grad_x) *grad_x = Tensor<T>(xs);
  std::vector<T> col(p.identity() ? 0 : static_cast<std::size_t>(p.rows()) * p.cols());
  std::vector<T> dcol(static_cast<std::size_t>(p.rows()) * p.cols());
  const ConstMatMap<T> w(weight.data(), ws.n, p.rows());
  MatMap<T> dw(grad_w.data(), ws.n, p.rows());
  for (int n = 0; n < xs.n; ++n) {
    const ConstMatMap<T> gy(grad_out.sample_ptr(n), ws.n, p.cols());
    const T* patches = x.sample_ptr(n);
    if (!p.identity()) {
      im2col(x.sample_ptr(n), p, col.data());
      patches = col.data();
    }
    dw.noalias() += gy * ConstMatMap<T>(patches, p.rows(), p.cols()).transpose();
    if (grad_x) {
      if (p.identity()) {
        MatMap<T>(grad_x->sample_ptr(n), p.rows(), p.cols()).noalias() = w.transpose() * gy;
      } else {
        MatMap<T>(dcol.data(), p.rows(), p.cols()).noalias() = w.transpose() * gy;
        col2im(dcol.data(), p, grad_x->sample_ptr(n));
      }
    }
  }
  if (grad_b) accumulate_channel_sums(grad_out, *grad_b);
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias, ConvGeometry g) {
  check_geometry(g);
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  check_square_kernel(ws);
  if (ws.n != xs.c) {
    throw DimensionError("conv_transpose2d: input has " + std::to_string(xs.c) + " channels, weight expects " +
                         std::to_string(ws.n));
  }
  check_bias(bias, ws.c);
  const int out_h = conv_transpose_out_extent(xs.h, ws.h, g);
  const int out_w = conv_transpose_out_extent(xs.w, ws.h, g);
  if (out_h < 1 || out_w < 1) throw DimensionError("conv_transpose2d: empty output");
  // The equivalent forward conv maps (cout, out_h, out_w) back to (cin, h, w).
  const ConvPlan p{ws.c, out_h, out_w, ws.h, g, xs.h, xs.w};
  if (conv_out_extent(out_h, ws.h, g) != xs.h || conv_out_extent(out_w, ws.h, g) != xs.w) {
    throw DimensionError("conv_transpose2d: geometry not invertible for input " + xs.str());
  }

  Tensor<T> out(Shape{xs.n, ws.c, out_h, out_w});
  std::vector<T> col(static_cast<std::size_t>(p.rows()) * p.cols());
  const ConstMatMap<T> w(weight.data(), ws.n, p.rows());
  for (int n = 0; n < xs.n; ++n) {
    const ConstMatMap<T> xin(x.sample_ptr(n), xs.c, p.cols());
    MatMap<T>(col.data(), p.rows(), p.cols()).noalias() = w.transpose() * xin;
    col2im(col.data(), p, out.sample_ptr(n));
  }
  if (bias) add_channel_bias(out, *bias);
  return out;
}

template <typename T>
void conv_transpose2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& grad_out,
                               ConvGeometry g, Tensor<T>* grad_x, Tensor<T>& grad_w, Tensor<T>* grad_b) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  const int out_h = conv_transpose_out_extent(xs.h, ws.h, g);
  const int out_w = conv_transpose_out_extent(xs.w, ws.h, g);
  require_same_shape(grad_out.shape(), Shape{xs.n, ws.c, out_h, out_w}, "conv_transpose2d_backward grad_out");
  require_same_shape(grad_w.shape(), ws, "conv_transpose2d_backward grad_w");
  const ConvPlan p{ws.c, out_h, out_w, ws.h, g, xs.h, xs.w};

  if (grad_x) *grad_x = Tensor<T>(xs);
  std::vector<T> col(static_cast<std::size_t>(p.rows()) * p.cols());
  const ConstMatMap<T> w(weight.data(), ws.n, p.rows());
  MatMap<T> dw(grad_w.data(), ws.n, p.rows());
  for (int n = 0; n < xs.n; ++n) {
    im2col(grad_out.sample_ptr(n), p, col.data());
    const ConstMatMap<T> gcol(col.data(), p.rows(), p.cols());
    const ConstMatMap<T> xin(x.sample_ptr(n), xs.c, p.cols());
    dw.noalias() += xin * gcol.transpose();
    if (grad_x) MatMap<T>(grad_x->sample_ptr(n), xs.c, p.cols()).noalias() = w * gcol;
  }
  if (grad_b) accumulate_channel_sums(grad_out, *grad_b);
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  Tensor<T> y(x.shape());
  const T* __restrict src = x.data();
  T* __restrict dst = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T v = src[i];
    dst[i] = std::max(v, T(0)) + slope * std::min(v, T(0));
  }
  return y;
}

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out, T slope) {
  require_same_shape(x.shape(), grad_out.shape(), "leaky_relu_backward");
  Tensor<T> g(x.shape());
  const T* __restrict src = x.data();
  const T* __restrict go = grad_out.data();
  T* __restrict dst = g.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T factor = src[i] >= T(0) ? T(1) : slope;
    dst[i] = go[i] * factor;
  }
  return g;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  const T* __restrict src = x.data();
  T* __restrict dst = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = std::max(src[i], T(0));
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& grad_out) {
  require_same_shape(y.shape(), grad_out.shape(), "relu_backward");
  Tensor<T> g(y.shape());
  const T* __restrict out = y.data();
  const T* __restrict go = grad_out.data();
  T* __restrict dst = g.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const T v = go[i];
    dst[i] = out[i] > T(0) ? v : T(0);
  }
  return g;
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, bool train, Rng& rng, std::vector<T>* mask) {
  if (!(p >= 0.0 && p < 1.0)) throw ParameterError("dropout probability must lie in [0, 1)");
  if (mask) mask->clear();
  if (!train || p == 0.0) return x;
  const T keep_scale = T(1.0 / (1.0 - p));
  // The mask comes from a splitmix64 stream keyed by one draw of `rng`; an
  // element is dropped when its 64-bit value falls below p * 2^64.
  const auto threshold = static_cast<std::uint64_t>(std::ldexp(p, 64));
  std::uint64_t state = rng();
  std::vector<T> local;
  std::vector<T>& m = mask ? *mask : local;
  m.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    m[i] = z < threshold ? T(0) : keep_scale;
  }
  Tensor<T> y(x.shape());
  const T* __restrict src = x.data();
  const T* __restrict mk = m.data();
  T* __restrict dst = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = src[i] * mk[i];
  return y;
}

template <typename T>
Tensor<T> dropout_backward(const std::vector<T>& mask, const Tensor<T>& grad_out) {
  if (mask.empty()) return grad_out;
  if (mask.size() != grad_out.size()) throw DimensionError("dropout_backward: mask size mismatch");
  Tensor<T> g(grad_out.shape());
  const T* __restrict go = grad_out.data();
  const T* __restrict mk = mask.data();
  T* __restrict dst = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] = go[i] * mk[i];
  return g;
}

// Sum of term(0..n) with a fixed number of interleaved partial sums, so the
// result does not depend on where the buffer happens to be aligned.
template <typename T, typename F>
double lane_sum(std::size_t n, F term) {
  constexpr std::size_t kLanes = 16;
  T acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += term(i + l);
  }
  double total = 0.0;
  for (std::size_t l = 0; l < kLanes; ++l) total += static_cast<double>(acc[l]);
  for (; i < n; ++i) total += static_cast<double>(term(i));
  return total;
}

template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, Tensor<T>& running_mean,
                      Tensor<T>& running_var, bool train, BatchNormCache<T>* cache) {
  const Shape s = x.shape();
  const auto channels = static_cast<std::size_t>(s.c);
  if (gamma.size() != channels || beta.size() != channels || running_mean.size() != channels ||
      running_var.size() != channels) {
    throw DimensionError("batchnorm2d: parameter length does not match " + std::to_string(s.c) + " channels");
  }
  const std::size_t per_channel = static_cast<std::size_t>(s.n) * s.plane();
  if (train && per_channel < 2) {
    throw DimensionError("batchnorm2d: train mode needs more than one value per channel, got " + s.str());
  }
  const auto plane = static_cast<Eigen::Index>(s.plane());
  auto channel_plane = [&](const Tensor<T>& t, int n, int c) {
    return Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(
        t.data() + (static_cast<std::size_t>(n) * s.c + c) * s.plane(), plane);
  };
  auto channel_plane_mut = [&](Tensor<T>& t, int n, int c) {
    return Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(
        t.data() + (static_cast<std::size_t>(n) * s.c + c) * s.plane(), plane);
  };

  Tensor<T> y(s);
  std::vector<T> inv_std(channels);
  const bool keep = train && cache;
  Tensor<T> normalized = keep ? Tensor<T>(s) : Tensor<T>();
  for (int c = 0; c < s.c; ++c) {
    double mean = 0.0;
    double var = 0.0;
    if (train) {
      // Per-plane partial sums are vectorized; planes are combined in double.
      for (int n = 0; n < s.n; ++n) {
        const T* p = channel_plane(x, n, c).data();
        mean += lane_sum<T>(s.plane(), [p](std::size_t i) { return p[i]; });
      }
      mean /= static_cast<double>(per_channel);
      const T m = T(mean);
      for (int n = 0; n < s.n; ++n) {
        const T* p = channel_plane(x, n, c).data();
        var += lane_sum<T>(s.plane(), [p, m](std::size_t i) { return (p[i] - m) * (p[i] - m); });
      }
      var /= static_cast<double>(per_channel);
      const double unbiased = var * static_cast<double>(per_channel) / static_cast<double>(per_channel - 1);
      running_mean[c] = T((1.0 - kBatchNormMomentum) * running_mean[c] + kBatchNormMomentum * mean);
      running_var[c] = T((1.0 - kBatchNormMomentum) * running_var[c] + kBatchNormMomentum * unbiased);
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    const T istd = T(1.0 / std::sqrt(var + kBatchNormEps));
    inv_std[c] = istd;
    const T m = T(mean);
    for (int n = 0; n < s.n; ++n) {
      if (keep) {
        auto xh = channel_plane_mut(normalized, n, c);
        xh = (channel_plane(x, n, c) - m) * istd;
        channel_plane_mut(y, n, c) = xh * gamma[c] + beta[c];
      } else {
        channel_plane_mut(y, n, c) = (channel_plane(x, n, c) - m) * (istd * gamma[c]) + beta[c];
      }
    }
  }
  if (cache) {
    cache->train = train;
    cache->inv_std = std::move(inv_std);
    cache->normalized = std::move(normalized);
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm2d_backward(const BatchNormCache<T>& cache, const Tensor<T>& gamma, const Tensor<T>& grad_out,
                               Tensor<T>& grad_gamma, Tensor<T>& grad_beta) {
  const Shape s = grad_out.shape();
  const auto plane = static_cast<Eigen::Index>(s.plane());
  auto at = [&](const Tensor<T>& t, int n, int c) {
    return Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(
        t.data() + (static_cast<std::size_t>(n) * s.c + c) * s.plane(), plane);
  };
  auto at_mut = [&](Tensor<T>& t, int n, int c) {
    return Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(
        t.data() + (static_cast<std::size_t>(n) * s.c + c) * s.plane(), plane);
  };
  Tensor<T> dx(s);
  if (!cache.train) {
    // Eval mode: affine map with frozen statistics. grad_gamma needs x_hat,
    // which eval mode does not keep; only the input gradient is produced.
    for (int c = 0; c < s.c; ++c) {
      const T scale = gamma[c] * cache.inv_std[c];
      for (int n = 0; n < s.n; ++n) at_mut(dx, n, c) = at(grad_out, n, c) * scale;
    }
    return dx;
  }
  require_same_shape(cache.normalized.shape(), s, "batchnorm2d_backward");
  const double count = static_cast<double>(s.n) * s.plane();
  for (int c = 0; c < s.c; ++c) {
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const T* g = at(grad_out, n, c).data();
      const T* xh = at(cache.normalized, n, c).data();
      sum_g += lane_sum<T>(s.plane(), [g](std::size_t i) { return g[i]; });
      sum_gx += lane_sum<T>(s.plane(), [g, xh](std::size_t i) { return g[i] * xh[i]; });
    }
    grad_beta[c] += T(sum_g);
    grad_gamma[c] += T(sum_gx);
    const T k = T(static_cast<double>(gamma[c]) * cache.inv_std[c]);
    const T mean_g = T(sum_g / count);
    const T mean_gx = T(sum_gx / count);
    for (int n = 0; n < s.n; ++n) {
      at_mut(dx, n, c) = k * (at(grad_out, n, c) - mean_g - at(cache.normalized, n, c) * mean_gx);
    }
  }
  return dx;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  const auto in = static_cast<int>(xs.sample());
  if (ws.c * ws.h * ws.w != in) {
    throw DimensionError("linear: input features " + std::to_string(in) + " vs weight " + ws.str());
  }
  check_bias(bias, ws.n);
  Tensor<T> y(Shape{xs.n, ws.n, 1, 1});
  const ConstMatMap<T> xm(x.data(), xs.n, in);
  const ConstMatMap<T> wm(weight.data(), ws.n, in);
  MatMap<T> ym(y.data(), xs.n, ws.n);
  ym.noalias() = xm * wm.transpose();
  if (bias) {
    for (int n = 0; n < xs.n; ++n) {
      for (int o = 0; o < ws.n; ++o) ym(n, o) += (*bias)[o];
    }
  }
  return y;
}

template <typename T>
void linear_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& grad_out, Tensor<T>* grad_x,
                     Tensor<T>& grad_w, Tensor<T>* grad_b) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  const auto in = static_cast<int>(xs.sample());
  require_same_shape(grad_out.shape(), Shape{xs.n, ws.n, 1, 1}, "linear_backward grad_out");
  require_same_shape(grad_w.shape(), ws, "linear_backward grad_w");
  const ConstMatMap<T> xm(x.data(), xs.n, in);
  const ConstMatMap<T> wm(weight.data(), ws.n, in);
  const ConstMatMap<T> gm(grad_out.data(), xs.n, ws.n);
  MatMap<T>(grad_w.data(), ws.n, in).noalias() += gm.transpose() * xm;
  if (grad_b) {
    for (int o = 0; o < ws.n; ++o) {
      T acc = 0;
      for (int n = 0; n < xs.n; ++n) acc += gm(n, o);
      (*grad_b)[o] += acc;
    }
  }
  if (grad_x) {
    *grad_x = Tensor<T>(xs);
    MatMap<T>(grad_x->data(), xs.n, in).noalias() = gm * wm;
  }
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  const Shape s = x.shape();
  if (s.plane() == 0) throw DimensionError("global_avg_pool: empty spatial extent");
  Tensor<T> y(Shape{s.n, s.c, 1, 1});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* p = x.data() + (static_cast<std::size_t>(n) * s.c + c) * s.plane();
      double acc = 0.0;
      for (std::size_t i = 0; i < s.plane(); ++i) acc += p[i];
      y[static_cast<std::size_t>(n) * s.c + c] = T(acc / static_cast<double>(s.plane()));
    }
  }
  return y;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Shape& input, const Tensor<T>& grad_out) {
  require_same_shape(grad_out.shape(), Shape{input.n, input.c, 1, 1}, "global_avg_pool_backward");
  Tensor<T> g(input);
  const T scale = T(1.0 / static_cast<double>(input.plane()));
  for (int n = 0; n < input.n; ++n) {
    for (int c = 0; c < input.c; ++c) {
      const T v = grad_out[static_cast<std::size_t>(n) * input.c + c] * scale;
      T* p = g.data() + (static_cast<std::size_t>(n) * input.c + c) * input.plane();
      std::fill_n(p, input.plane(), v);
    }
  }
  return g;
}

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x, int kernel, ConvGeometry g, std::vector<std::size_t>* argmax) {
  check_geometry(g);
  const Shape s = x.shape();
  const int oh = conv_out_extent(s.h, kernel, g);
  const int ow = conv_out_extent(s.w, kernel, g);
  if (oh < 1 || ow < 1) throw DimensionError("max_pool2d: input " + s.str() + " smaller than window");
  Tensor<T> y(Shape{s.n, s.c, oh, ow});
  if (argmax) argmax->assign(y.size(), 0);
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * s.plane();
      for (int oi = 0; oi < oh; ++oi) {
        for (int oj = 0; oj < ow; ++oj, ++o) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t best_idx = base;
          for (int ki = 0; ki < kernel; ++ki) {
            const int ii = oi * g.stride - g.padding + ki;
            if (ii < 0 || ii >= s.h) continue;
            for (int kj = 0; kj < kernel; ++kj) {
              const int jj = oj * g.stride - g.padding + kj;
              if (jj < 0 || jj >= s.w) continue;
              const std::size_t idx = base + static_cast<std::size_t>(ii) * s.w + jj;
              if (x[idx] > best) {
                best = x[idx];
                best_idx = idx;
              }
            }
          }
          y[o] = best;
          if (argmax) (*argmax)[o] = best_idx;
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> max_pool2d_backward(const Shape& input, const std::vector<std::size_t>& argmax, const Tensor<T>& grad_out) {
  if (argmax.size() != grad_out.size()) throw DimensionError("max_pool2d_backward: argmax size mismatch");
  Tensor<T> g(input);
  for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += grad_out[o];
  return g;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<T> y(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
  return y;
}

#define PGNN_INSTANTIATE_OPS(T)                                                                                  \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, ConvGeometry);                \
  template void conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, ConvGeometry, Tensor<T>*, \
                                Tensor<T>&, Tensor<T>*);                                                        \
  template Tensor<T> conv_transpose2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, ConvGeometry);      \
  template void conv_transpose2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, ConvGeometry,   \
                                          Tensor<T>*, Tensor<T>&, Tensor<T>*);                                  \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                                          \
  template Tensor<T> leaky_relu_backward(const Tensor<T>&, const Tensor<T>&, T);                               \
  template Tensor<T> relu(const Tensor<T>&);                                                                   \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> dropout(const Tensor<T>&, double, bool, Rng&, std::vector<T>*);                           \
  template Tensor<T> dropout_backward(const std::vector<T>&, const Tensor<T>&);                                \
  template Tensor<T> batchnorm2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>&, Tensor<T>&,  \
                                 bool, BatchNormCache<T>*);                                                     \
  template Tensor<T> batchnorm2d_backward(const BatchNormCache<T>&, const Tensor<T>&, const Tensor<T>&,         \
                                          Tensor<T>&, Tensor<T>&);                                              \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*);                              \
  template void linear_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>*, Tensor<T>&,   \
                                Tensor<T>*);                                                                    \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                                        \
  template Tensor<T> global_avg_pool_backward(const Shape&, const Tensor<T>&);                                 \
  template Tensor<T> max_pool2d(const Tensor<T>&, int, ConvGeometry, std::vector<std::size_t>*);               \
  template Tensor<T> max_pool2d_backward(const Shape&, const std::vector<std::size_t>&, const Tensor<T>&);     \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);

PGNN_INSTANTIATE_OPS(float)
PGNN_INSTANTIATE_OPS(double)

#undef PGNN_INSTANTIATE_OPS

}  // namespace pgnn::nn
