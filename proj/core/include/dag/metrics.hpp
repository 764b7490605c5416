#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dag/landmarks.hpp"

namespace dag {

struct EvalRecord {
  LandmarkSet predicted;
  LandmarkSet truth;
  /// Per-image normalizer, e.g. the ground-truth distance of a reference pair.
  double norm_distance = 1.0;
  /// Physical units per pixel; radial errors are scaled by it when present.
  std::optional<double> pixel_scale;
};

/// Sorted per-image NMEs. The curve at x is the fraction of values <= x.
struct CedCurve {
  std::vector<double> values;

  std::size_t count() const noexcept { return values.size(); }
  double at(double x) const;
};

/// Ground-truth distance between landmarks `a` and `b`.
double pair_distance(const LandmarkSet& truth, std::size_t a, std::size_t b);

double nme(const EvalRecord& rec);
/// Fraction of records with nme > threshold.
double failure_rate(std::span<const EvalRecord> records, double threshold = 0.1);
/// Area under the CED on [0, threshold] divided by threshold.
double auc(std::span<const EvalRecord> records, double threshold = 0.1);
CedCurve ced(std::span<const EvalRecord> records);

/// Per-landmark Euclidean errors of every record, in record order.
std::vector<double> radial_errors(std::span<const EvalRecord> records);
double mre(std::span<const EvalRecord> records);
/// For each threshold, fraction of landmark instances with radial error < threshold.
std::vector<double> sdr(std::span<const EvalRecord> records, std::span<const double> thresholds);
/// Symmetric set-to-set distance; landmark identity is ignored.
double hausdorff(const EvalRecord& rec);
/// Largest per-landmark error between corresponding points.
double max_matched_error(const EvalRecord& rec);
/// Population standard deviation of all radial errors.
double radial_std(std::span<const EvalRecord> records);

}  // namespace dag
