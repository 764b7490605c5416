#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "dag/autodiff.hpp"
#include "dag/image.hpp"

namespace dag {

/// Backbone activations, [channels x height x width] on a tape.
struct FeatureMap {
  Var values;
  std::size_t stride = 1;

  std::size_t channels() const { return values.shape()[0]; }
  std::size_t height() const { return values.shape()[1]; }
  std::size_t width() const { return values.shape()[2]; }
};

struct ConvLayer {
  Parameter kernel;  // [out, in, 3, 3]
  Parameter bias;    // [out]
  std::size_t stride = 1;
};

/// conv(1->16,s1) conv(16->32,s2) conv(32->64,s2) conv(64->D,s1), relu after each.
struct BackboneParams {
  std::array<ConvLayer, 4> layers;

  std::vector<Parameter*> parameters();
  std::size_t out_channels() const { return layers.back().kernel.value.dim(0); }
};

inline constexpr std::size_t kBackboneStride = 4;

enum class ConvActivation { none, relu };

/// 3x3 cross-correlation with zero padding 1. input [C,H,W], kernel [O,C,3,3],
/// bias [O]; stride 1 or 2. `relu` applies max(0, .) to the biased output.
Var conv2d(Var input, Var kernel, Var bias, std::size_t stride, ConvActivation activation = ConvActivation::none);

/// He-normal kernels from `seed`, zero biases.
BackboneParams init_backbone(std::size_t out_channels, std::uint64_t seed);

FeatureMap extract_features(Tape& tape, const Image& image, BackboneParams& params);

}  // namespace dag
