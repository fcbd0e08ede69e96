#pragma once

#include <filesystem>

#include "pgnn/field.hpp"

namespace pgnn {

/// 8-bit RGB PNG, no alpha. Output bytes are a pure function of the image.
void write_png(const RgbImage& image, const std::filesystem::path& path);

/// Decodes any PNG libpng understands into 8-bit RGB (alpha is composited away).
RgbImage read_png(const std::filesystem::path& path);

}  // namespace pgnn
