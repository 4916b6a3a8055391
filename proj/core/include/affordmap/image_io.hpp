#pragma once

#include <filesystem>
#include <vector>

#include "affordmap/types.hpp"

namespace affordmap::io {

struct GrayImage {
  int h = 0;
  int w = 0;
  std::vector<unsigned char> pixels;
};

/// Any PNG, converted to 8-bit grayscale.
GrayImage read_gray_png(const std::filesystem::path& path);

/// PNG or JPEG (chosen by file signature), converted to 8-bit RGB.
RgbImage read_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace affordmap::io
