#pragma once

#include <cstddef>
#include <vector>

namespace dag {

/// Grayscale raster, row-major, intensities in [0, 1]. Pixel (r, c) covers
/// [c, c+1) x [r, r+1) in image coordinates, so its center is (c+0.5, r+0.5).
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), pixels(h * w, fill) {}

  double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }

  friend bool operator==(const Image&, const Image&) = default;
};

}  // namespace dag
