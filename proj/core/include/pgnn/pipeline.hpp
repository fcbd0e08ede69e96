#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pgnn/field.hpp"
#include "pgnn/metrics.hpp"
#include "pgnn/models.hpp"
#include "pgnn/nn/tensor.hpp"
#include "pgnn/random.hpp"

namespace pgnn {

struct TrainConfig {
  int epochs = 55;
  int window_lo = 25;  // inclusive, 1-based epochs
  int window_hi = 55;
  double lr_inverse = 1e-3;
  double lr_regressor = 1e-4;
  int batch_size = 16;
  std::uint64_t seed = 0;
  /// Weight of mean((x_hat - grayscale(Z))^2) added to the physics loss.
  double fidelity_weight = 0.0;

  void validate() const;
  int window_length() const { return window_hi - window_lo + 1; }
};

/// Mean over batch, channels and interior pixels of the squared 5-point
/// Laplacian (pixel units). Writes d(loss)/d(x_hat) into `grad` when given.
template <typename T>
double physics_loss(const nn::Tensor<T>& x_hat, nn::Tensor<T>* grad = nullptr);

/// Mean squared error. `grad`, when given, receives d(loss)/d(preds).
double supervised_loss(std::span<const double> preds, std::span<const double> targets,
                       std::span<double> grad = {});

/// ITU-R 601 luma of a [0, 1] RGB batch, broadcast to `channels` channels.
nn::Tensor<float> grayscale(const nn::Tensor<float>& rgb, int channels);

/// (n, 3, h, w) float tensor scaled to [0, 1]. All images must share extents.
nn::Tensor<float> images_to_tensor(std::span<const RgbImage> images);
nn::Tensor<float> images_to_tensor(std::span<const RgbImage* const> images);

void clip_unit(nn::Tensor<float>& t);

struct InverseTrainResult {
  InverseNet<float> model;
  std::vector<double> loss_trace;  // mean objective per epoch
};

/// Unsupervised training of the inverse network from images alone.
InverseTrainResult train_inverse(const nn::Tensor<float>& images, const TrainConfig& config,
                                 const InverseNetConfig& net = {});

/// Eval-mode inverse mapping, clipped to [0, 1], processed in chunks.
nn::Tensor<float> apply_inverse(InverseNet<float>& model, const nn::Tensor<float>& z, int chunk = 32);

struct EpochMetrics {
  int epoch = 0;
  Metrics test;
};

struct RegressorTrainResult {
  RegressorNet<float> model;
  std::vector<double> train_loss;          // per epoch, standardized units
  std::vector<EpochMetrics> window_trace;  // one row per epoch in the window
  Metrics windowed;                        // mean over window_trace
};

/// Supervised training on inputs (images or estimated fields). Targets are
/// standardized with the training mean and standard deviation; the model
/// stores the inverse transform. Test metrics are computed after each epoch
/// inside the evaluation window and averaged.
RegressorTrainResult train_regressor(const nn::Tensor<float>& inputs, std::span<const double> labels,
                                     const nn::Tensor<float>& test_inputs, std::span<const double> test_labels,
                                     const TrainConfig& config, const RegressorConfig& net = {});

/// Eval-mode predictions in label units, processed in chunks.
std::vector<double> predict_batched(RegressorNet<float>& model, const nn::Tensor<float>& x, int chunk = 32);

std::vector<double> predict_direct(RegressorNet<float>& direct, const nn::Tensor<float>& z);
std::vector<double> predict_inverse(InverseNet<float>& inverse, RegressorNet<float>& regressor,
                                    const nn::Tensor<float>& z);

using InverseMap = std::function<nn::Tensor<float>(const nn::Tensor<float>&)>;
using FieldRegressor = std::function<std::vector<double>(const nn::Tensor<float>&)>;
/// Two-stage prediction with arbitrary stages; the intermediate field is
/// clipped to [0, 1] before the second stage.
std::vector<double> predict_inverse(const InverseMap& inverse, const FieldRegressor& regressor,
                                    const nn::Tensor<float>& z);

struct Split {
  std::vector<int> train;
  std::vector<int> test;
  /// True when train_size is smaller than the number of non-empty strata.
  bool degenerate = false;
};

/// Per-stratum train counts for strata = floor(label): proportional quotas
/// with largest-remainder rounding (ties: larger stratum, then lower key).
std::vector<std::pair<long, int>> stratum_allocation(std::span<const double> labels, int train_size);

/// Stratified split with seeded shuffling inside each stratum. Index lists
/// are sorted ascending.
Split stratified_split(std::span<const double> labels, int train_size, std::uint64_t seed);

struct PreprocessConfig {
  int roi_top = 0;
  int roi_left = 0;
  int roi_height = 110;
  int roi_width = 350;
  int blur_kernel = 5;
  double blur_sigma = 1.0;
  int resize_height = 224;
  int resize_width = 224;
  double flip_probability = 0.5;
  double max_rotation_degrees = 360.0;
  double normalize_mean = 0.5;
  double normalize_std = 0.5;

  void validate() const;
};

/// ROI crop, Gaussian blur, bilinear resize, (train only) random flips and
/// rotation, scale to [0, 1], then per-channel (x - mean) / std. Returns
/// (1, 3, resize_height, resize_width).
nn::Tensor<float> preprocess_real(const RgbImage& image, const PreprocessConfig& config, Rng& rng, bool train);

}  // namespace pgnn
