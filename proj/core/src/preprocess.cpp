#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "pgnn/errors.hpp"
#include "pgnn/pipeline.hpp"

namespace pgnn {

namespace {

// Planar float image, channel-major.
struct Planes {
  int h = 0;
  int w = 0;
  std::vector<double> v;  // 3 * h * w

  Planes(int hh, int ww) : h(hh), w(ww), v(static_cast<std::size_t>(3) * hh * ww, 0.0) {}
  double& at(int c, int i, int j) { return v[(static_cast<std::size_t>(c) * h + i) * w + j]; }
  double at(int c, int i, int j) const { return v[(static_cast<std::size_t>(c) * h + i) * w + j]; }
};

// Mirror without repeating the edge pixel: -1 -> 1, n -> n-2.
int reflect101(int p, int n) {
  if (n == 1) return 0;
  while (p < 0 || p >= n) p = p < 0 ? -p : 2 * (n - 1) - p;
  return p;
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(size));
  const int r = size / 2;
  double sum = 0.0;
  for (int t = -r; t <= r; ++t) {
    k[static_cast<std::size_t>(t + r)] = std::exp(-0.5 * t * t / (sigma * sigma));
    sum += k[static_cast<std::size_t>(t + r)];
  }
  for (auto& x : k) x /= sum;
  return k;
}

Planes blur(const Planes& src, int size, double sigma) {
  const auto k = gaussian_kernel(size, sigma);
  const int r = size / 2;
  Planes tmp(src.h, src.w), out(src.h, src.w);
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < src.h; ++i) {
      for (int j = 0; j < src.w; ++j) {
        double acc = 0.0;
        for (int t = -r; t <= r; ++t) acc += k[static_cast<std::size_t>(t + r)] * src.at(c, i, reflect101(j + t, src.w));
        tmp.at(c, i, j) = acc;
      }
    }
    for (int i = 0; i < src.h; ++i) {
      for (int j = 0; j < src.w; ++j) {
        double acc = 0.0;
        for (int t = -r; t <= r; ++t) acc += k[static_cast<std::size_t>(t + r)] * tmp.at(c, reflect101(i + t, src.h), j);
        out.at(c, i, j) = acc;
      }
    }
  }
  return out;
}

// Bilinear sample at continuous pixel coordinates; outside samples read `fill`
// unless `clamp` is set.
double sample(const Planes& src, int c, double y, double x, bool clamp, double fill) {
  if (clamp) {
    y = std::clamp(y, 0.0, static_cast<double>(src.h - 1));
    x = std::clamp(x, 0.0, static_cast<double>(src.w - 1));
  } else if (y < -0.5 || x < -0.5 || y > src.h - 0.5 || x > src.w - 0.5) {
    return fill;
  }
  const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, src.h - 1);
  const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, src.w - 1);
  const int y1 = std::min(y0 + 1, src.h - 1);
  const int x1 = std::min(x0 + 1, src.w - 1);
  const double fy = std::clamp(y - y0, 0.0, 1.0);
  const double fx = std::clamp(x - x0, 0.0, 1.0);
  const double top = src.at(c, y0, x0) * (1 - fx) + src.at(c, y0, x1) * fx;
  const double bottom = src.at(c, y1, x0) * (1 - fx) + src.at(c, y1, x1) * fx;
  return top * (1 - fy) + bottom * fy;
}

Planes resize(const Planes& src, int h, int w) {
  Planes out(h, w);
  const double sy = static_cast<double>(src.h) / h;
  const double sx = static_cast<double>(src.w) / w;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) out.at(c, i, j) = sample(src, c, (i + 0.5) * sy - 0.5, (j + 0.5) * sx - 0.5, true, 0.0);
    }
  }
  return out;
}

Planes rotate(const Planes& src, double degrees) {
  Planes out(src.h, src.w);
  const double a = degrees * std::numbers::pi / 180.0;
  const double ca = std::cos(a), sa = std::sin(a);
  const double cy = (src.h - 1) / 2.0, cx = (src.w - 1) / 2.0;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < src.h; ++i) {
      for (int j = 0; j < src.w; ++j) {
        const double dy = i - cy, dx = j - cx;
        out.at(c, i, j) = sample(src, c, cy + ca * dy - sa * dx, cx + sa * dy + ca * dx, false, 0.0);
      }
    }
  }
  return out;
}

}  // namespace

void PreprocessConfig::validate() const {
  if (roi_top < 0 || roi_left < 0 || roi_height < 1 || roi_width < 1) {
    throw ParameterError("ROI must have a non-negative origin and positive extents");
  }
  if (blur_kernel < 1 || blur_kernel % 2 == 0) throw ParameterError("blur kernel must be odd and positive");
  if (!(blur_sigma > 0.0)) throw ParameterError("blur sigma must be positive");
  if (resize_height < 1 || resize_width < 1) throw ParameterError("resize target must be positive");
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) throw ParameterError("flip probability must lie in [0, 1]");
  if (!(max_rotation_degrees >= 0.0)) throw ParameterError("rotation limit must be non-negative");
  if (!(normalize_std > 0.0)) throw ParameterError("normalization std must be positive");
}

nn::Tensor<float> preprocess_real(const RgbImage& image, const PreprocessConfig& config, Rng& rng, bool train) {
  config.validate();
  if (config.roi_top + config.roi_height > image.height || config.roi_left + config.roi_width > image.width) {
    throw DimensionError("ROI " + std::to_string(config.roi_height) + "x" + std::to_string(config.roi_width) + " at (" +
                         std::to_string(config.roi_top) + "," + std::to_string(config.roi_left) +
                         ") exceeds the " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                         " source image");
  }
  Planes roi(config.roi_height, config.roi_width);
  for (int i = 0; i < roi.h; ++i) {
    for (int j = 0; j < roi.w; ++j) {
      for (int c = 0; c < 3; ++c) roi.at(c, i, j) = image.at(config.roi_top + i, config.roi_left + j, c);
    }
  }
  Planes img = resize(blur(roi, config.blur_kernel, config.blur_sigma), config.resize_height, config.resize_width);

  if (train) {
    std::bernoulli_distribution flip(config.flip_probability);
    const bool hflip = flip(rng);
    const bool vflip = flip(rng);
    const double angle = uniform(rng, 0.0, config.max_rotation_degrees);
    if (hflip || vflip) {
      Planes f(img.h, img.w);
      for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < img.h; ++i) {
          for (int j = 0; j < img.w; ++j) {
            f.at(c, i, j) = img.at(c, vflip ? img.h - 1 - i : i, hflip ? img.w - 1 - j : j);
          }
        }
      }
      img = std::move(f);
    }
    if (angle != 0.0) img = rotate(img, angle);
  }

  nn::Tensor<float> out(nn::Shape{1, 3, img.h, img.w});
  for (std::size_t k = 0; k < img.v.size(); ++k) {
    const double unit = std::clamp(img.v[k] / 255.0, 0.0, 1.0);
    out[k] = static_cast<float>((unit - config.normalize_mean) / config.normalize_std);
  }
  return out;
}

}  // namespace pgnn
