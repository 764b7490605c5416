#pragma once

#include <cstddef>
#include <vector>

#include "dag/tensor.hpp"

namespace dag {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Landmark coordinates in image pixels: origin top-left, x right, y down.
struct LandmarkSet {
  std::vector<Point2> points;

  std::size_t size() const noexcept { return points.size(); }
  Point2& operator[](std::size_t i) { return points[i]; }
  const Point2& operator[](std::size_t i) const { return points[i]; }

  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;
};

/// [N x 2] with columns (x, y).
Tensor to_tensor(const LandmarkSet& landmarks);
LandmarkSet landmarks_from_tensor(const Tensor& t);

}  // namespace dag
