#include "dag/signal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "dag/errors.hpp"
#include "dag/ops.hpp"

namespace dag {

namespace {

// One axis of the lookup: lower cell index, fractional weight toward the upper
// cell, and d(coordinate)/d(input) (zero when clamped).
struct AxisSample {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double frac = 0.0;
  double slope = 0.0;
};

AxisSample locate(double image_coord, std::size_t stride, std::size_t cells) {
  const double max_coord = static_cast<double>(cells - 1);
  double u = image_coord / static_cast<double>(stride) - 0.5;
  AxisSample s;
  s.slope = 1.0 / static_cast<double>(stride);
  if (u < 0.0) {
    u = 0.0;
    s.slope = 0.0;
  } else if (u > max_coord) {
    u = max_coord;
    s.slope = 0.0;
  }
  if (cells == 1) return AxisSample{0, 0, 0.0, 0.0};
  s.lo = std::min(static_cast<std::size_t>(std::floor(u)), cells - 2);
  s.hi = s.lo + 1;
  s.frac = u - static_cast<double>(s.lo);
  return s;
}

}  // namespace

Var bilinear_sample(const FeatureMap& features, Var landmarks) {
  const Tensor& h = features.values.value();
  const Tensor& v = landmarks.value();
  require(h.rank() == 3 && h.size() > 0, "bilinear_sample: feature map must be a non-empty [D,H,W]");
  require(v.rank() == 2 && v.cols() == 2, "bilinear_sample: landmarks must be [N x 2]");
  const std::size_t depth = h.dim(0), rows = h.dim(1), cols = h.dim(2), n = v.rows();
  const std::size_t plane = rows * cols;

  std::vector<AxisSample> ax(n), ay(n);
  Tensor out(Shape{n, depth});
  for (std::size_t i = 0; i < n; ++i) {
    ax[i] = locate(v(i, 0), features.stride, cols);
    ay[i] = locate(v(i, 1), features.stride, rows);
    const double a = ax[i].frac, b = ay[i].frac;
    const std::array<std::size_t, 4> idx{ay[i].lo * cols + ax[i].lo, ay[i].lo * cols + ax[i].hi,
                                         ay[i].hi * cols + ax[i].lo, ay[i].hi * cols + ax[i].hi};
    const std::array<double, 4> w{(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b};
    for (std::size_t d = 0; d < depth; ++d) {
      const double* p = h.data() + d * plane;
      out(i, d) = w[0] * p[idx[0]] + w[1] * p[idx[1]] + w[2] * p[idx[2]] + w[3] * p[idx[3]];
    }
  }

  Var map = features.values;
  return landmarks.tape().record(
      std::move(out), {map, landmarks},
      [map, landmarks, ax = std::move(ax), ay = std::move(ay), depth, cols, plane, n](Tape& tape, const Tensor& g) {
        const bool want_map = tape.requires_grad(map);
        const bool want_points = tape.requires_grad(landmarks);
        const Tensor& h = map.value();
        for (std::size_t i = 0; i < n; ++i) {
          const double a = ax[i].frac, b = ay[i].frac;
          const std::array<std::size_t, 4> idx{ay[i].lo * cols + ax[i].lo, ay[i].lo * cols + ax[i].hi,
                                               ay[i].hi * cols + ax[i].lo, ay[i].hi * cols + ax[i].hi};
          if (want_map) {
            const std::array<double, 4> w{(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b};
            Tensor& gh = tape.grad(map);
            for (std::size_t d = 0; d < depth; ++d) {
              double* p = gh.data() + d * plane;
              const double gd = g(i, d);
              for (int k = 0; k < 4; ++k) p[idx[k]] += w[k] * gd;
            }
          }
          if (want_points) {
            double gx = 0.0, gy = 0.0;
            for (std::size_t d = 0; d < depth; ++d) {
              const double* p = h.data() + d * plane;
              const double gd = g(i, d);
              gx += gd * ((1 - b) * (p[idx[1]] - p[idx[0]]) + b * (p[idx[3]] - p[idx[2]]));
              gy += gd * ((1 - a) * (p[idx[2]] - p[idx[0]]) + a * (p[idx[3]] - p[idx[1]]));
            }
            Tensor& gv = tape.grad(landmarks);
            gv(i, 0) += gx * ax[i].slope;
            gv(i, 1) += gy * ay[i].slope;
          }
        }
      });
}

Var shape_feature(Var landmarks) {
  const Tensor& v = landmarks.value();
  require(v.rank() == 2 && v.cols() == 2, "shape_feature: landmarks must be [N x 2]");
  const std::size_t n = v.rows();
  require(n >= 2, "shape_feature: need at least 2 landmarks");
  Tensor out(Shape{n, 2 * (n - 1)});
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t slot = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      out(i, 2 * slot) = v(j, 0) - v(i, 0);
      out(i, 2 * slot + 1) = v(j, 1) - v(i, 1);
      ++slot;
    }
  }
  return landmarks.tape().record(std::move(out), {landmarks}, [landmarks, n](Tape& tape, const Tensor& g) {
    Tensor& gv = tape.grad(landmarks);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t slot = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        for (std::size_t c = 0; c < 2; ++c) {
          const double gc = g(i, 2 * slot + c);
          gv(j, c) += gc;
          gv(i, c) -= gc;
        }
        ++slot;
      }
    }
  });
}

Var build_graph_signal(const FeatureMap& features, Var landmarks, double scale_norm, bool include_shape) {
  Var visual = bilinear_sample(features, landmarks);
  if (!include_shape) return visual;
  require(scale_norm > 0.0, "build_graph_signal: scale_norm must be positive");
  const std::array<Var, 2> parts{visual, scale(shape_feature(landmarks), 1.0 / scale_norm)};
  return concat(parts, 1);
}

}  // namespace dag
