#pragma once

#include <cstdint>
#include <vector>

namespace loomata {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit interleaved raster, row-major, 1 (gray) or 3 (RGB) channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c), data(std::size_t(w) * h * c) {}

  std::uint8_t* pixel(int x, int y) { return data.data() + (std::size_t(y) * width + x) * channels; }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + (std::size_t(y) * width + x) * channels;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

}  // namespace loomata
