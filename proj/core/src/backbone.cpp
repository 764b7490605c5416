#include "dag/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dag/errors.hpp"
#include "dag/ops.hpp"
#include "eigen_map.hpp"

namespace dag {

using detail::as_matrix;

namespace {

struct ConvGeometry {
  std::size_t channels, height, width, out_height, out_width, stride;
  std::size_t patch() const { return channels * 9; }
  std::size_t pixels() const { return out_height * out_width; }
};

// cols[(c*9 + ky*3 + kx), oy*Wo + ox] = input[c, oy*s + ky - 1, ox*s + kx - 1], zero outside.
void im2col(const Tensor& input, const ConvGeometry& g, Tensor& cols) {
  const double* src = input.data();
  double* dst = cols.data();
  const std::size_t npix = g.pixels();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        double* row = dst + (c * 9 + ky * 3 + kx) * npix;
        for (std::size_t oy = 0; oy < g.out_height; ++oy) {
          const long y = static_cast<long>(oy * g.stride + ky) - 1;
          double* out = row + oy * g.out_width;
          if (y < 0 || y >= static_cast<long>(g.height)) {
            std::fill(out, out + g.out_width, 0.0);
            continue;
          }
          const double* line = src + (c * g.height + static_cast<std::size_t>(y)) * g.width;
          if (g.stride == 1) {
            // out[ox] = line[ox + kx - 1]; only the border column can fall outside.
            if (kx == 0) {
              out[0] = 0.0;
              std::copy(line, line + g.width - 1, out + 1);
            } else if (kx == 1) {
              std::copy(line, line + g.width, out);
            } else {
              std::copy(line + 1, line + g.width, out);
              out[g.width - 1] = 0.0;
            }
            continue;
          }
          for (std::size_t ox = 0; ox < g.out_width; ++ox) {
            const long x = static_cast<long>(ox * g.stride + kx) - 1;
            out[ox] = (x < 0 || x >= static_cast<long>(g.width)) ? 0.0 : line[x];
          }
        }
      }
    }
  }
}

void col2im_add(const Tensor& cols, const ConvGeometry& g, Tensor& input_grad) {
  const double* src = cols.data();
  double* dst = input_grad.data();
  const std::size_t npix = g.pixels();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const double* row = src + (c * 9 + ky * 3 + kx) * npix;
        for (std::size_t oy = 0; oy < g.out_height; ++oy) {
          const long y = static_cast<long>(oy * g.stride + ky) - 1;
          if (y < 0 || y >= static_cast<long>(g.height)) continue;
          double* line = dst + (c * g.height + static_cast<std::size_t>(y)) * g.width;
          const double* in = row + oy * g.out_width;
          for (std::size_t ox = 0; ox < g.out_width; ++ox) {
            const long x = static_cast<long>(ox * g.stride + kx) - 1;
            if (x >= 0 && x < static_cast<long>(g.width)) line[x] += in[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(Var input, Var kernel, Var bias, std::size_t stride, ConvActivation activation) {
  const Tensor& in = input.value();
  const Tensor& k = kernel.value();
  if (in.rank() != 3) throw ContractViolation("conv2d: input must be [C,H,W], got " + shape_string(in.shape()));
  if (!(k.rank() == 4 && k.dim(2) == 3 && k.dim(3) == 3)) throw ContractViolation("conv2d: kernel must be [O,C,3,3], got " + shape_string(k.shape()));
  if (k.dim(1) != in.dim(0)) throw ContractViolation("conv2d: kernel expects " + std::to_string(k.dim(1)) + " channels, input has " +
                                     std::to_string(in.dim(0)));
  require(bias.value().size() == k.dim(0), "conv2d: bias length does not match output channels");
  require(stride == 1 || stride == 2, "conv2d: stride must be 1 or 2");

  ConvGeometry g{in.dim(0), in.dim(1), in.dim(2), (in.dim(1) - 1) / stride + 1, (in.dim(2) - 1) / stride + 1, stride};
  const std::size_t out_ch = k.dim(0);
  const auto patch = static_cast<Eigen::Index>(g.patch());
  const auto npix = static_cast<Eigen::Index>(g.pixels());

  Tensor cols = Tensor::uninitialized(Shape{g.patch(), g.pixels()});
  im2col(in, g, cols);
  Tensor out = Tensor::uninitialized(Shape{out_ch, g.out_height, g.out_width});
  auto out_m = as_matrix(out, static_cast<Eigen::Index>(out_ch), npix);
  out_m.noalias() = as_matrix(k, static_cast<Eigen::Index>(out_ch), patch) * as_matrix(cols, patch, npix);
  const Tensor& b = bias.value();
  const bool rectify = activation == ConvActivation::relu;
  for (std::size_t o = 0; o < out_ch; ++o) {
    double* row = out.data() + o * g.pixels();
    const double bo = b[o];
    if (rectify) {
      for (std::size_t i = 0; i < g.pixels(); ++i) row[i] = std::max(row[i] + bo, 0.0);
    } else {
      for (std::size_t i = 0; i < g.pixels(); ++i) row[i] += bo;
    }
  }

  Tape& tape = input.tape();
  Var result = tape.record(std::move(out), {input, kernel, bias}, nullptr);
  if (!tape.requires_grad(result)) return result;
  tape.set_backward(
      result, [input, kernel, bias, result, rectify, g, out_ch, patch, npix, cols = std::move(cols)](Tape& tape, const Tensor& out_grad) {
        const auto oc = static_cast<Eigen::Index>(out_ch);
        Tensor masked;
        const Tensor* gp = &out_grad;
        if (rectify) {
          masked = Tensor::uninitialized(out_grad.shape());
          const double* y = result.value().data();
          const double* src = out_grad.data();
          double* dst = masked.data();
          for (std::size_t i = 0; i < masked.size(); ++i) dst[i] = y[i] > 0.0 ? src[i] : 0.0;
          gp = &masked;
        }
        const Tensor& grad = *gp;
        auto g_m = as_matrix(grad, oc, npix);
        if (tape.requires_grad(kernel)) {
          as_matrix(tape.grad(kernel), oc, patch).noalias() += g_m * as_matrix(cols, patch, npix).transpose();
        }
        if (tape.requires_grad(bias)) {
          Tensor& gb = tape.grad(bias);
          for (Eigen::Index o = 0; o < oc; ++o) gb[static_cast<std::size_t>(o)] += g_m.row(o).sum();
        }
        if (tape.requires_grad(input)) {
          Tensor dcols = Tensor::uninitialized(Shape{g.patch(), g.pixels()});
          as_matrix(dcols, patch, npix).noalias() = as_matrix(kernel.value(), oc, patch).transpose() * g_m;
          col2im_add(dcols, g, tape.grad(input));
        }
      });
  return result;
}

std::vector<Parameter*> BackboneParams::parameters() {
  std::vector<Parameter*> out;
  for (ConvLayer& layer : layers) {
    out.push_back(&layer.kernel);
    out.push_back(&layer.bias);
  }
  return out;
}

BackboneParams init_backbone(std::size_t out_channels, std::uint64_t seed) {
  require(out_channels > 0, "init_backbone: out_channels must be positive");
  const std::array<std::size_t, 5> widths{1, 16, 32, 64, out_channels};
  const std::array<std::size_t, 4> strides{1, 2, 2, 1};
  std::mt19937_64 rng(seed);
  BackboneParams params;
  for (std::size_t l = 0; l < 4; ++l) {
    const std::size_t in = widths[l], out = widths[l + 1];
    Tensor kernel(Shape{out, in, 3, 3});
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(in * 9)));
    for (double& v : kernel.values()) v = normal(rng);
    const std::string prefix = "backbone.conv" + std::to_string(l);
    params.layers[l].kernel = Parameter(prefix + ".kernel", std::move(kernel));
    params.layers[l].bias = Parameter(prefix + ".bias", Tensor(Shape{out}));
    params.layers[l].stride = strides[l];
  }
  return params;
}

FeatureMap extract_features(Tape& tape, const Image& image, BackboneParams& params) {
  if (!(image.height % kBackboneStride == 0 && image.width % kBackboneStride == 0)) throw ContractViolation("extract_features: image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
              " is not divisible by the backbone stride " + std::to_string(kBackboneStride));
  require(image.pixels.size() == image.height * image.width, "extract_features: pixel buffer size mismatch");
  Var x = tape.constant(Tensor(Shape{1, image.height, image.width}, image.pixels));
  for (ConvLayer& layer : params.layers) {
    x = conv2d(x, tape.parameter(layer.kernel), tape.parameter(layer.bias), layer.stride, ConvActivation::relu);
  }
  return FeatureMap{x, kBackboneStride};
}

}  // namespace dag
