#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "dag/image.hpp"
#include "dag/landmarks.hpp"

namespace dag {

/// 12-gon ring plus four interior points, in [0,1]^2.
struct Template {
  LandmarkSet points;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::size_t> flip_permutation;
  /// Ground-truth pair whose distance normalizes NME.
  std::pair<std::size_t, std::size_t> norm_pair{0, 6};
};

const Template& landmark_template();

struct Rect {
  double x = 0.0, y = 0.0, width = 0.0, height = 0.0;
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct SynthParams {
  std::size_t width = 128;
  std::size_t height = 128;
  double max_rotation_deg = 25.0;
  double min_scale = 0.8;
  double max_scale = 1.2;
  double max_translation = 10.0;
  /// Bound on the projective row entries, per pixel of centered coordinates.
  double max_projective = 0.0005;
  double landmark_jitter = 1.0;
  double occlusion_rate = 0.5;
  double min_occlusion = 0.2;
  double max_occlusion = 0.4;
  double occlusion_gray = 0.5;
  double stroke_peak = 200.0 / 255.0;
  double stroke_sigma = 1.0;
  double blob_peak = 150.0 / 255.0;
  double blob_sigma = 2.0;
  double background = 30.0 / 255.0;
  double noise_sigma = 5.0 / 255.0;
  double max_outside_fraction = 0.2;
  std::size_t max_attempts = 10;
};

struct SampleRecord {
  Image image;
  LandmarkSet landmarks;
  bool occluded = false;
  Rect occlusion;
  std::uint64_t seed = 0;
};

/// Deterministic in (seed, params). Pixels are quantized to k/255.
SampleRecord generate_sample(std::uint64_t seed, const SynthParams& params = {});

/// Distinct seeds for distinct (split, index) pairs under one dataset seed.
std::uint64_t sample_seed(std::uint64_t dataset_seed, std::size_t split, std::size_t index);

std::vector<SampleRecord> generate_split(std::uint64_t dataset_seed, std::size_t split, std::size_t count,
                                         const SynthParams& params = {});

struct AugmentRanges {
  double max_rotation_deg = 30.0;
  double flip_probability = 0.5;
  double min_scale = 0.75;
  double max_scale = 1.25;
};

struct AugmentChoice {
  double rotation_deg = 0.0;
  bool flip = false;
  double scale = 1.0;
};

AugmentChoice draw_augment(std::uint64_t seed, const AugmentRanges& ranges = {});
/// Flip, then rotate and scale about the image center. Landmarks are mapped
/// exactly; the image is resampled bilinearly with edge clamping.
SampleRecord augment_with(const SampleRecord& rec, const AugmentChoice& choice);
SampleRecord augment(const SampleRecord& rec, std::uint64_t seed, const AugmentRanges& ranges = {});

/// Fraction of landmarks outside [0, width) x [0, height).
double outside_fraction(const LandmarkSet& landmarks, std::size_t width, std::size_t height);

}  // namespace dag
