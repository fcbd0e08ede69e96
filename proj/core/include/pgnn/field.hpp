#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pgnn {

/// Rectangular sampling of the unit square: `height` rows along u, `width`
/// columns along v, both axes including their end points.
struct GridSpec {
  int height = 64;
  int width = 64;

  double spacing_u() const { return 1.0 / (height - 1); }
  double spacing_v() const { return 1.0 / (width - 1); }
  std::size_t count() const { return static_cast<std::size_t>(height) * width; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Throws DimensionError unless the grid is at least 8x8, the smallest grid
/// the generator and solvers accept.
void validate_grid(const GridSpec& grid);

/// Row-major scalar moisture field on a GridSpec.
class MoistureField {
 public:
  MoistureField() = default;
  explicit MoistureField(GridSpec grid, double fill = 0.0);
  MoistureField(GridSpec grid, std::vector<double> values);

  const GridSpec& grid() const noexcept { return grid_; }
  int height() const noexcept { return grid_.height; }
  int width() const noexcept { return grid_.width; }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(int i, int j) { return values_[index(i, j)]; }
  double operator()(int i, int j) const { return values_[index(i, j)]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  void clip(double lo, double hi);

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * grid_.width + j; }

  GridSpec grid_{0, 0};
  std::vector<double> values_;
};

/// 8-bit, 3-channel, row-major interleaved image.
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  RgbImage() = default;
  RgbImage(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, 0) {}

  std::uint8_t& at(int i, int j, int c) { return pixels[(static_cast<std::size_t>(i) * width + j) * 3 + c]; }
  std::uint8_t at(int i, int j, int c) const {
    return pixels[(static_cast<std::size_t>(i) * width + j) * 3 + c];
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Five-point Laplacian. Interior pixels get the second-difference sum; the
/// one-pixel border is zero. With `pixel_units` the spacing is 1, otherwise
/// the physical spacing of each axis is used.
MoistureField laplacian5(const MoistureField& field, bool pixel_units);

/// True for pixels where laplacian5 produces a stencil value.
inline bool is_interior(const GridSpec& g, int i, int j) {
  return i > 0 && j > 0 && i < g.height - 1 && j < g.width - 1;
}

/// Riemann estimate of the integral over the unit square: mean value times area.
double integrate(const MoistureField& field);

/// Raw field file: little-endian float32, row-major, no header.
void write_raw_field(const MoistureField& field, const std::filesystem::path& path);
MoistureField read_raw_field(const std::filesystem::path& path, GridSpec grid);

}  // namespace pgnn
