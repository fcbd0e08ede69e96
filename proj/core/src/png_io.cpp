#include "pgnn/png_io.hpp"

#include <png.h>

#include <cstring>

#include "pgnn/errors.hpp"

namespace pgnn {

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  png_image desc;
  std::memset(&desc, 0, sizeof desc);
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(image.width);
  desc.height = static_cast<png_uint_32>(image.height);
  desc.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&desc, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    std::string msg = desc.message;
    png_image_free(&desc);
    throw IoError("cannot write PNG " + path.string() + ": " + msg);
  }
}

RgbImage read_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingFileError("image", path.string());
  png_image desc;
  std::memset(&desc, 0, sizeof desc);
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&desc, path.c_str())) {
    throw FormatError("cannot decode PNG " + path.string() + ": " + desc.message);
  }
  desc.format = PNG_FORMAT_RGB;
  RgbImage image(static_cast<int>(desc.height), static_cast<int>(desc.width));
  if (!png_image_finish_read(&desc, nullptr, image.pixels.data(), 0, nullptr)) {
    std::string msg = desc.message;
    png_image_free(&desc);
    throw FormatError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return image;
}

}  // namespace pgnn
