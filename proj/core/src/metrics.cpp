#include "dag/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "dag/errors.hpp"

namespace dag {

namespace {

void check_record(const EvalRecord& rec, const char* op) {
  if (rec.predicted.size() != rec.truth.size())
    throw ContractViolation(std::string(op) + ": " + std::to_string(rec.predicted.size()) + " predictions vs " +
                            std::to_string(rec.truth.size()) + " ground-truth landmarks");
  if (!(rec.norm_distance > 0.0)) throw ContractViolation(std::string(op) + ": normalization distance must be positive");
  if (rec.pixel_scale && !(*rec.pixel_scale > 0.0)) throw ContractViolation(std::string(op) + ": pixel scale must be positive");
}

void check_nonempty(std::span<const EvalRecord> records, const char* op) {
  if (records.empty()) throw ContractViolation(std::string(op) + ": no records");
}

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

double CedCurve::at(double x) const {
  if (values.empty()) return 0.0;
  const auto end = std::upper_bound(values.begin(), values.end(), x);
  return static_cast<double>(end - values.begin()) / static_cast<double>(values.size());
}

double pair_distance(const LandmarkSet& truth, std::size_t a, std::size_t b) {
  require(a < truth.size() && b < truth.size(), "pair_distance: index out of range");
  return distance(truth[a], truth[b]);
}

double nme(const EvalRecord& rec) {
  check_record(rec, "nme");
  require(rec.truth.size() > 0, "nme: record has no landmarks");
  double total = 0.0;
  for (std::size_t i = 0; i < rec.truth.size(); ++i) total += distance(rec.predicted[i], rec.truth[i]);
  return total / static_cast<double>(rec.truth.size()) / rec.norm_distance;
}

double failure_rate(std::span<const EvalRecord> records, double threshold) {
  check_nonempty(records, "failure_rate");
  std::size_t failed = 0;
  for (const EvalRecord& r : records) failed += nme(r) > threshold ? 1 : 0;
  return static_cast<double>(failed) / static_cast<double>(records.size());
}

CedCurve ced(std::span<const EvalRecord> records) {
  check_nonempty(records, "ced");
  CedCurve curve;
  curve.values.reserve(records.size());
  for (const EvalRecord& r : records) curve.values.push_back(nme(r));
  std::sort(curve.values.begin(), curve.values.end());
  return curve;
}

double auc(std::span<const EvalRecord> records, double threshold) {
  require(threshold > 0.0, "auc: threshold must be positive");
  const CedCurve curve = ced(records);
  const double n = static_cast<double>(curve.count());
  // Between consecutive sorted values the curve is flat at k/n.
  double area = 0.0;
  for (std::size_t k = 0; k < curve.count(); ++k) {
    const double lo = std::min(curve.values[k], threshold);
    const double hi = k + 1 < curve.count() ? std::min(curve.values[k + 1], threshold) : threshold;
    area += static_cast<double>(k + 1) / n * (hi - lo);
  }
  return area / threshold;
}

std::vector<double> radial_errors(std::span<const EvalRecord> records) {
  std::vector<double> out;
  for (const EvalRecord& r : records) {
    check_record(r, "radial_errors");
    const double s = r.pixel_scale.value_or(1.0);
    for (std::size_t i = 0; i < r.truth.size(); ++i) out.push_back(s * distance(r.predicted[i], r.truth[i]));
  }
  return out;
}

double mre(std::span<const EvalRecord> records) {
  check_nonempty(records, "mre");
  const std::vector<double> errors = radial_errors(records);
  require(!errors.empty(), "mre: records have no landmarks");
  double total = 0.0;
  for (double e : errors) total += e;
  return total / static_cast<double>(errors.size());
}

std::vector<double> sdr(std::span<const EvalRecord> records, std::span<const double> thresholds) {
  require(!thresholds.empty(), "sdr: no thresholds");
  check_nonempty(records, "sdr");
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    require(thresholds[k] > 0.0, "sdr: thresholds must be positive");
    require(k == 0 || thresholds[k] > thresholds[k - 1], "sdr: thresholds must be ascending");
  }
  const std::vector<double> errors = radial_errors(records);
  require(!errors.empty(), "sdr: records have no landmarks");
  std::vector<double> out;
  for (double tau : thresholds) {
    const auto hits = std::count_if(errors.begin(), errors.end(), [tau](double e) { return e < tau; });
    out.push_back(static_cast<double>(hits) / static_cast<double>(errors.size()));
  }
  return out;
}

double hausdorff(const EvalRecord& rec) {
  check_record(rec, "hausdorff");
  require(rec.truth.size() > 0, "hausdorff: empty point sets");
  auto directed = [](const LandmarkSet& from, const LandmarkSet& to) {
    double worst = 0.0;
    for (const Point2& p : from.points) {
      double nearest = INFINITY;
      for (const Point2& q : to.points) nearest = std::min(nearest, distance(p, q));
      worst = std::max(worst, nearest);
    }
    return worst;
  };
  const double s = rec.pixel_scale.value_or(1.0);
  return s * std::max(directed(rec.predicted, rec.truth), directed(rec.truth, rec.predicted));
}

double max_matched_error(const EvalRecord& rec) {
  check_record(rec, "max_matched_error");
  double worst = 0.0;
  for (std::size_t i = 0; i < rec.truth.size(); ++i) worst = std::max(worst, distance(rec.predicted[i], rec.truth[i]));
  return rec.pixel_scale.value_or(1.0) * worst;
}

double radial_std(std::span<const EvalRecord> records) {
  const std::vector<double> errors = radial_errors(records);
  require(errors.size() >= 2, "radial_std: need at least two landmark instances");
  double mean = 0.0;
  for (double e : errors) mean += e;
  mean /= static_cast<double>(errors.size());
  double var = 0.0;
  for (double e : errors) var += (e - mean) * (e - mean);
  return std::sqrt(var / static_cast<double>(errors.size()));
}

}  // namespace dag
