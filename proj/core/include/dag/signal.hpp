#pragma once

#include "dag/autodiff.hpp"
#include "dag/backbone.hpp"

namespace dag {

/// Differentiable bilinear lookup of every channel at each landmark.
/// Image point (x, y) maps to map coordinates (x/stride - 0.5, y/stride - 0.5),
/// clamped to the valid range of cell centers. landmarks [N x 2] -> [N x D].
Var bilinear_sample(const FeatureMap& features, Var landmarks);

/// Row i holds v_j - v_i for every j != i, ascending j, x before y.
/// [N x 2] -> [N x 2(N-1)].
Var shape_feature(Var landmarks);

/// Concatenates sampled visual features with shape features divided by
/// `scale_norm`. With `include_shape` false only the visual part is returned.
Var build_graph_signal(const FeatureMap& features, Var landmarks, double scale_norm, bool include_shape = true);

}  // namespace dag
