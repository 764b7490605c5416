#include "dag/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dag/errors.hpp"

namespace dag {

const Template& landmark_template() {
  static const Template tmpl = [] {
    Template t;
    for (std::size_t k = 0; k < 12; ++k) {
      const double a = static_cast<double>(k) * std::numbers::pi / 6.0;
      t.points.points.push_back({0.5 + 0.35 * std::cos(a), 0.5 + 0.35 * std::sin(a)});
      t.edges.emplace_back(k, (k + 1) % 12);
    }
    t.points.points.push_back({0.35, 0.35});
    t.points.points.push_back({0.65, 0.35});
    t.points.points.push_back({0.35, 0.65});
    t.points.points.push_back({0.65, 0.65});
    t.flip_permutation = {6, 5, 4, 3, 2, 1, 0, 11, 10, 9, 8, 7, 13, 12, 15, 14};
    return t;
  }();
  return tmpl;
}

double outside_fraction(const LandmarkSet& landmarks, std::size_t width, std::size_t height) {
  if (landmarks.size() == 0) return 0.0;
  std::size_t outside = 0;
  for (const Point2& p : landmarks.points) {
    const bool in = p.x >= 0.0 && p.x < static_cast<double>(width) && p.y >= 0.0 && p.y < static_cast<double>(height);
    outside += in ? 0 : 1;
  }
  return static_cast<double>(outside) / static_cast<double>(landmarks.size());
}

namespace {

double segment_distance_sq(const Point2& p, const Point2& a, const Point2& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = p.x - (a.x + t * dx), ey = p.y - (a.y + t * dy);
  return ex * ex + ey * ey;
}

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

Image render(const LandmarkSet& pts, const Template& tmpl, const SynthParams& p, std::mt19937_64& rng) {
  Image img(p.height, p.width, p.background);
  const double stroke_den = 2.0 * p.stroke_sigma * p.stroke_sigma;
  const double blob_den = 2.0 * p.blob_sigma * p.blob_sigma;
  std::vector<std::size_t> interior;
  std::vector<bool> on_ring(pts.size(), false);
  for (const auto& [a, b] : tmpl.edges) on_ring[a] = on_ring[b] = true;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (!on_ring[i]) interior.push_back(i);

  for (std::size_t r = 0; r < p.height; ++r) {
    for (std::size_t c = 0; c < p.width; ++c) {
      const Point2 q{static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5};
      double d2 = INFINITY;
      for (const auto& [a, b] : tmpl.edges) d2 = std::min(d2, segment_distance_sq(q, pts[a], pts[b]));
      double v = p.background + (p.stroke_peak - p.background) * std::exp(-d2 / stroke_den);
      for (std::size_t i : interior) {
        const double dx = q.x - pts[i].x, dy = q.y - pts[i].y;
        v = std::max(v, p.background + (p.blob_peak - p.background) * std::exp(-(dx * dx + dy * dy) / blob_den));
      }
      img.at(r, c) = v;
    }
  }
  std::normal_distribution<double> noise(0.0, p.noise_sigma);
  for (double& v : img.pixels) v += noise(rng);
  return img;
}

}  // namespace

SampleRecord generate_sample(std::uint64_t seed, const SynthParams& p) {
  require(p.width > 0 && p.height > 0, "generate_sample: empty image size");
  require(p.min_scale > 0.0 && p.min_scale <= p.max_scale, "generate_sample: bad scale range");
  require(p.occlusion_rate >= 0.0 && p.occlusion_rate <= 1.0, "generate_sample: occlusion rate outside [0,1]");
  require(p.min_occlusion >= 0.0 && p.min_occlusion <= p.max_occlusion && p.max_occlusion <= 1.0,
          "generate_sample: bad occlusion size range");
  const Template& tmpl = landmark_template();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const double w = static_cast<double>(p.width), h = static_cast<double>(p.height);
  const double cx = w / 2.0, cy = h / 2.0;

  LandmarkSet pts;
  bool placed = false;
  for (std::size_t attempt = 0; attempt < p.max_attempts && !placed; ++attempt) {
    const double angle = uniform(-p.max_rotation_deg, p.max_rotation_deg) * std::numbers::pi / 180.0;
    const double s = uniform(p.min_scale, p.max_scale);
    const double tx = uniform(-p.max_translation, p.max_translation);
    const double ty = uniform(-p.max_translation, p.max_translation);
    const double g = uniform(-p.max_projective, p.max_projective);
    const double hh = uniform(-p.max_projective, p.max_projective);
    const double ca = std::cos(angle), sa = std::sin(angle);
    std::normal_distribution<double> jitter(0.0, p.landmark_jitter);
    pts.points.clear();
    bool finite = true;
    for (const Point2& t : tmpl.points.points) {
      // Template scaled to the image, centered at the origin.
      const double x = (t.x - 0.5) * w, y = (t.y - 0.5) * h;
      const double sx = s * (ca * x - sa * y), sy = s * (sa * x + ca * y);
      const double r = g * sx + hh * sy + 1.0;
      finite = finite && std::abs(r) > 1e-6;
      pts.points.push_back({sx / r + cx + tx + jitter(rng), sy / r + cy + ty + jitter(rng)});
    }
    placed = finite && outside_fraction(pts, p.width, p.height) <= p.max_outside_fraction;
  }
  if (!placed) throw GenerationError("generate_sample: seed " + std::to_string(seed) + " kept pushing landmarks out of the image after " +
                                     std::to_string(p.max_attempts) + " attempts");

  SampleRecord rec;
  rec.seed = seed;
  rec.landmarks = pts;
  rec.image = render(pts, tmpl, p, rng);
  if (unit(rng) < p.occlusion_rate) {
    const double rw = std::round(uniform(p.min_occlusion, p.max_occlusion) * w);
    const double rh = std::round(uniform(p.min_occlusion, p.max_occlusion) * h);
    const double rx = std::floor(uniform(0.0, w - rw + 1.0));
    const double ry = std::floor(uniform(0.0, h - rh + 1.0));
    rec.occluded = true;
    rec.occlusion = Rect{rx, ry, rw, rh};
    for (auto r = static_cast<std::size_t>(ry); r < static_cast<std::size_t>(ry + rh) && r < p.height; ++r)
      for (auto c = static_cast<std::size_t>(rx); c < static_cast<std::size_t>(rx + rw) && c < p.width; ++c)
        rec.image.at(r, c) = p.occlusion_gray;
  }
  for (double& v : rec.image.pixels) v = quantize(v);
  return rec;
}

std::uint64_t sample_seed(std::uint64_t dataset_seed, std::size_t split, std::size_t index) {
  require(split < 256 && index < (std::size_t{1} << 24), "sample_seed: split or index out of range");
  return (dataset_seed << 32) | (static_cast<std::uint64_t>(split) << 24) | static_cast<std::uint64_t>(index);
}

std::vector<SampleRecord> generate_split(std::uint64_t dataset_seed, std::size_t split, std::size_t count,
                                         const SynthParams& params) {
  std::vector<SampleRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_sample(sample_seed(dataset_seed, split, i), params));
  return out;
}

AugmentChoice draw_augment(std::uint64_t seed, const AugmentRanges& ranges) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AugmentChoice c;
  c.rotation_deg = -ranges.max_rotation_deg + 2.0 * ranges.max_rotation_deg * unit(rng);
  c.flip = unit(rng) < ranges.flip_probability;
  c.scale = ranges.min_scale + (ranges.max_scale - ranges.min_scale) * unit(rng);
  return c;
}

SampleRecord augment_with(const SampleRecord& rec, const AugmentChoice& choice) {
  require(choice.scale > 0.0, "augment: scale must be positive");
  const Image& src = rec.image;
  const double w = static_cast<double>(src.width), h = static_cast<double>(src.height);
  const double cx = w / 2.0, cy = h / 2.0;
  const double a = choice.rotation_deg * std::numbers::pi / 180.0;
  const double ca = std::cos(a), sa = std::sin(a), s = choice.scale;
  const double f = choice.flip ? -1.0 : 1.0;
  // Forward map: q = c + s R diag(f,1) (p - c).
  auto forward = [&](const Point2& p) {
    const double x = f * (p.x - cx), y = p.y - cy;
    return Point2{cx + s * (ca * x - sa * y), cy + s * (sa * x + ca * y)};
  };
  auto inverse = [&](const Point2& q) {
    const double x = (q.x - cx) / s, y = (q.y - cy) / s;
    return Point2{cx + f * (ca * x + sa * y), cy + (-sa * x + ca * y)};
  };

  SampleRecord out;
  out.seed = rec.seed;
  out.occluded = rec.occluded;
  out.image = Image(src.height, src.width);
  for (std::size_t r = 0; r < src.height; ++r) {
    for (std::size_t c = 0; c < src.width; ++c) {
      const Point2 p = inverse({static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5});
      const double u = std::clamp(p.x - 0.5, 0.0, w - 1.0), v = std::clamp(p.y - 0.5, 0.0, h - 1.0);
      const auto x0 = static_cast<std::size_t>(std::floor(u)), y0 = static_cast<std::size_t>(std::floor(v));
      const std::size_t x1 = std::min(x0 + 1, src.width - 1), y1 = std::min(y0 + 1, src.height - 1);
      const double fx = u - static_cast<double>(x0), fy = v - static_cast<double>(y0);
      out.image.at(r, c) = (1 - fy) * ((1 - fx) * src.at(y0, x0) + fx * src.at(y0, x1)) +
                           fy * ((1 - fx) * src.at(y1, x0) + fx * src.at(y1, x1));
    }
  }

  const std::size_t n = rec.landmarks.size();
  out.landmarks.points.resize(n);
  const std::vector<std::size_t>& perm = landmark_template().flip_permutation;
  if (choice.flip) require(n == perm.size(), "augment: flipping needs the template's landmark count");
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t from = choice.flip ? perm[i] : i;
    out.landmarks[i] = forward(rec.landmarks[from]);
  }

  if (rec.occluded) {
    const Rect& o = rec.occlusion;
    double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
    for (const Point2& corner : {Point2{o.x, o.y}, Point2{o.x + o.width, o.y}, Point2{o.x, o.y + o.height},
                                 Point2{o.x + o.width, o.y + o.height}}) {
      const Point2 q = forward(corner);
      x0 = std::min(x0, q.x), y0 = std::min(y0, q.y), x1 = std::max(x1, q.x), y1 = std::max(y1, q.y);
    }
    out.occlusion = Rect{x0, y0, x1 - x0, y1 - y0};
  }
  return out;
}

SampleRecord augment(const SampleRecord& rec, std::uint64_t seed, const AugmentRanges& ranges) {
  return augment_with(rec, draw_augment(seed, ranges));
}

}  // namespace dag
