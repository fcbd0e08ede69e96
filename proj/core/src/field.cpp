#include "pgnn/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "pgnn/errors.hpp"

namespace pgnn {

void validate_grid(const GridSpec& grid) {
  if (grid.height < 8 || grid.width < 8) {
    throw DimensionError("grid must be at least 8x8, got " + std::to_string(grid.height) + "x" +
                         std::to_string(grid.width));
  }
}

MoistureField::MoistureField(GridSpec grid, double fill) : grid_(grid), values_(grid.count(), fill) {}

MoistureField::MoistureField(GridSpec grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.count()) {
    throw DimensionError("field value count does not match grid");
  }
}

void MoistureField::clip(double lo, double hi) {
  for (double& v : values_) v = std::clamp(v, lo, hi);
}

MoistureField laplacian5(const MoistureField& field, bool pixel_units) {
  const int n = field.height();
  const int m = field.width();
  if (n < 3 || m < 3) throw DimensionError("laplacian5 needs at least a 3x3 grid");

  const double inv_hu2 = pixel_units ? 1.0 : 1.0 / (field.grid().spacing_u() * field.grid().spacing_u());
  const double inv_hv2 = pixel_units ? 1.0 : 1.0 / (field.grid().spacing_v() * field.grid().spacing_v());

  MoistureField out(field.grid(), 0.0);
  for (int i = 1; i < n - 1; ++i) {
    for (int j = 1; j < m - 1; ++j) {
      const double c = field(i, j);
      const double duu = field(i + 1, j) + field(i - 1, j) - 2.0 * c;
      const double dvv = field(i, j + 1) + field(i, j - 1) - 2.0 * c;
      out(i, j) = duu * inv_hu2 + dvv * inv_hv2;
    }
  }
  return out;
}

double integrate(const MoistureField& field) {
  if (field.empty()) throw DimensionError("cannot integrate an empty field");
  const auto v = field.values();
  const double area = 1.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()) * area;
}

namespace {

std::uint32_t to_little_endian(std::uint32_t bits) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(bits);
  return bits;
}

}  // namespace

void write_raw_field(const MoistureField& field, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (double v : field.values()) {
    const auto bits = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

MoistureField read_raw_field(const std::filesystem::path& path, GridSpec grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("raw field", path.string());
  std::vector<double> values(grid.count());
  for (double& v : values) {
    std::uint32_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
      throw FormatError("raw field " + path.string() + " is shorter than the grid");
    }
    v = std::bit_cast<float>(to_little_endian(bits));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("raw field " + path.string() + " is longer than the grid");
  }
  return MoistureField(grid, std::move(values));
}

}  // namespace pgnn
