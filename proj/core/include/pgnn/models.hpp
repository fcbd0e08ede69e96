#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "pgnn/nn/layers.hpp"
#include "pgnn/nn/params.hpp"

namespace pgnn {

/// Image-to-field network: three padded 3x3 convolutions (each followed by
/// LeakyReLU, batch normalization and dropout) and a transposed convolution
/// back to `out_channels`. Spatial size is preserved; the output is linear.
struct InverseNetConfig {
  int in_channels = 3;
  std::array<int, 3> widths{16, 32, 16};
  int out_channels = 3;
  int kernel = 3;
  double dropout = 0.2;

  friend bool operator==(const InverseNetConfig&, const InverseNetConfig&) = default;
};

enum class RegressorVariant { resnet18, resnet_small };

std::string to_string(RegressorVariant v);
/// Accepts "resnet18" and "resnet-small"; throws ParameterError otherwise.
RegressorVariant parse_variant(const std::string& name);

struct RegressorConfig {
  RegressorVariant variant = RegressorVariant::resnet_small;
  int in_channels = 3;
  /// Reserved; pretrained backbones are not shipped and `true` is rejected.
  bool pretrained = false;

  int feature_width() const { return variant == RegressorVariant::resnet18 ? 512 : 64; }
  int fusion_width() const { return variant == RegressorVariant::resnet18 ? 128 : 32; }

  friend bool operator==(const RegressorConfig&, const RegressorConfig&) = default;
};

template <typename T>
class InverseNet {
 public:
  InverseNet(const InverseNetConfig& config, std::uint64_t seed);

  /// z is (n, in_channels, h, w) scaled to [0, 1].
  nn::Tensor<T> forward(const nn::Tensor<T>& z, nn::Mode mode);
  /// Accumulates parameter gradients; returns the gradient w.r.t. the input
  /// when `need_input_grad`.
  nn::Tensor<T> backward(const nn::Tensor<T>& grad_out, bool need_input_grad = false);

  nn::ParamStore<T>& params() { return store_; }
  const nn::ParamStore<T>& params() const { return store_; }
  const InverseNetConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

 private:
  struct Stage {
    nn::Conv2dLayer<T> conv;
    nn::LeakyReluLayer<T> act;
    nn::BatchNorm2dLayer<T> norm;
    nn::DropoutLayer<T> drop;
  };

  InverseNetConfig config_;
  std::uint64_t seed_;
  nn::ParamStore<T> store_;
  Rng rng_;
  std::vector<Stage> stages_;
  nn::ConvTranspose2dLayer<T> head_;
};

/// Residual basic block: conv3x3(stride)-BN-ReLU-conv3x3-BN plus identity or
/// 1x1 projection shortcut, then ReLU.
template <typename T>
class BasicBlock {
 public:
  BasicBlock(nn::ParamStore<T>& store, const std::string& name, int cin, int cout, int stride);

  void init(Rng& rng);
  nn::Tensor<T> forward(const nn::Tensor<T>& x, nn::Mode mode);
  nn::Tensor<T> backward(const nn::Tensor<T>& grad_out);

 private:
  nn::Conv2dLayer<T> conv1_;
  nn::BatchNorm2dLayer<T> bn1_;
  nn::ReluLayer<T> relu1_;
  nn::Conv2dLayer<T> conv2_;
  nn::BatchNorm2dLayer<T> bn2_;
  bool projection_ = false;
  nn::Conv2dLayer<T> shortcut_conv_;
  nn::BatchNorm2dLayer<T> shortcut_bn_;
  nn::ReluLayer<T> relu_out_;
};

/// Residual backbone plus a two-layer fusion block producing one scalar per
/// sample. `forward` applies the stored target de-standardization
/// (`output_scale`, `output_shift` buffers); `forward_raw` does not.
template <typename T>
class RegressorNet {
 public:
  RegressorNet(const RegressorConfig& config, std::uint64_t seed);

  /// (n, feature_width, 1, 1) backbone features.
  nn::Tensor<T> features(const nn::Tensor<T>& x, nn::Mode mode);
  /// (n, 1, 1, 1) network output before de-standardization.
  nn::Tensor<T> forward_raw(const nn::Tensor<T>& x, nn::Mode mode);
  /// One prediction per sample in label units.
  std::vector<double> predict(const nn::Tensor<T>& x, nn::Mode mode = nn::Mode::eval);
  /// Backward from d(loss)/d(forward_raw output).
  nn::Tensor<T> backward(const nn::Tensor<T>& grad_out, bool need_input_grad = false);

  void set_target_scaling(double shift, double scale);
  double target_shift() const;
  double target_scale() const;

  nn::ParamStore<T>& params() { return store_; }
  const nn::ParamStore<T>& params() const { return store_; }
  const RegressorConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

 private:
  RegressorConfig config_;
  std::uint64_t seed_;
  nn::ParamStore<T> store_;
  nn::Conv2dLayer<T> stem_conv_;
  nn::BatchNorm2dLayer<T> stem_bn_;
  nn::ReluLayer<T> stem_relu_;
  bool stem_pool_ = false;
  nn::MaxPool2dLayer<T> pool_;
  std::vector<BasicBlock<T>> blocks_;
  nn::GlobalAvgPoolLayer<T> gap_;
  nn::LinearLayer<T> fc1_;
  nn::ReluLayer<T> fc_relu_;
  nn::LinearLayer<T> fc2_;
  nn::Param<T>* shift_ = nullptr;
  nn::Param<T>* scale_ = nullptr;
};

extern template class InverseNet<float>;
extern template class InverseNet<double>;
extern template class BasicBlock<float>;
extern template class BasicBlock<double>;
extern template class RegressorNet<float>;
extern template class RegressorNet<double>;

/// Number of conv/transposed-conv weights and biases in an InverseNet,
/// computed from the layer formulas.
std::size_t inverse_net_conv_parameter_count(const InverseNetConfig& config);

using ModelBundle = std::variant<InverseNet<float>, RegressorNet<float>>;

inline constexpr std::uint32_t kWeightFileVersion = 1;

/// Weight file: "PGNN", u32 version, u32 length + JSON config blob, u32
/// tensor count, then per tensor: u32 name length, name, u32 ndim, u32 dims,
/// float32 data. All integers and floats little-endian.
void save_model(const InverseNet<float>& model, const std::filesystem::path& path);
void save_model(const RegressorNet<float>& model, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);
InverseNet<float> load_inverse_net(const std::filesystem::path& path);
RegressorNet<float> load_regressor(const std::filesystem::path& path);

}  // namespace pgnn
