#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dag/autodiff.hpp"
#include "dag/graph.hpp"
#include "dag/landmarks.hpp"

namespace dag {

enum class TransformKind { perspective, affine };

/// Smallest |r| = |g x + h y + i| accepted when applying a transform.
inline constexpr double kMinHomogeneousScale = 1e-6;

/// 3x3 homogeneous matrix, row-major [a b c; d e f; g h i].
struct PerspectiveTransform {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static PerspectiveTransform identity() { return {}; }
  /// Throws DegenerateTransform if |r| <= kMinHomogeneousScale.
  Point2 apply(Point2 p) const;
  friend PerspectiveTransform operator*(const PerspectiveTransform& lhs, const PerspectiveTransform& rhs);
};

/// Row-major reshape of 9 values; no normalization.
PerspectiveTransform vector_to_perspective(std::span<const double> theta);
/// Top two rows from 6 values; bottom row fixed to [0 0 1].
PerspectiveTransform vector_to_affine(std::span<const double> theta);
LandmarkSet apply_perspective(const PerspectiveTransform& m, const LandmarkSet& landmarks);

/// Differentiable application. transform holds 9 values, landmarks [N x 2].
Var apply_perspective(Var transform, Var landmarks);
/// [1 x 6] -> [1 x 9] with bottom row [0 0 1].
Var affine_to_homogeneous(Var affine);

/// MLP over the concatenated per-layer node sums. The network regresses the
/// transform in a centered frame normalized by the image width; the output
/// is re-expressed in pixel coordinates by a fixed linear conjugation, so
/// identity stays identity and translation entries get pixel-scale reach.
struct ReadoutHeadParams {
  AffineParams hidden;
  AffineParams output;
  TransformKind kind = TransformKind::perspective;
  double frame_width = 1.0;
  double frame_height = 1.0;

  std::size_t out_dim() const { return kind == TransformKind::perspective ? 9 : 6; }
  std::vector<Parameter*> parameters();
};

/// Final layer zero weights with bias = flattened identity.
ReadoutHeadParams make_readout_head(const std::string& name, std::size_t readout_width, std::size_t hidden,
                                    TransformKind kind, double frame_width, double frame_height,
                                    std::mt19937_64& rng);

/// Returns [1 x out_dim] transform parameters in pixel coordinates.
Var gin_readout(Tape& tape, std::span<const Var> layer_features, ReadoutHeadParams& params);

}  // namespace dag
