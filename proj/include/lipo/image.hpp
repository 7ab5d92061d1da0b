#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lipo {

/// 8-bit grayscale raster, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  bool empty() const { return width <= 0 || height <= 0; }
};

/// Loads a PGM (P2/P5) or PNG raster. Color PNG input is converted to
/// grayscale with BT.601 luma. Throws std::runtime_error on I/O or format
/// errors.
Image load_image(const std::string& path);

void save_pgm(const Image& image, const std::string& path);

}  // namespace lipo
