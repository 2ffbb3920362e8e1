#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace plard {

/// 8-bit image, interleaved channels, row-major.
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;

  Image8() = default;
  Image8(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, fill) {}

  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const Image8&) const = default;
};

/// Reads gray, gray+alpha, RGB or RGBA PNGs; alpha is dropped, gray is kept
/// as one channel.
Image8 load_png(const std::string& path);
void save_png(const Image8& image, const std::string& path);

}  // namespace plard
