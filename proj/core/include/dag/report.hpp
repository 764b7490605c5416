#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>
#include <nlohmann/json.hpp>

#include "dag/cascade.hpp"
#include "dag/graph.hpp"
#include "dag/metrics.hpp"

namespace dag {

struct SubsetReport {
  std::size_t count = 0;
  // Unset when the subset is empty.
  std::optional<double> nme, failure_rate, auc, mre, hausdorff_mean, radial_std;
  std::vector<double> sdr;
};

struct EvalReport {
  double threshold = 0.1;
  std::vector<double> sdr_thresholds;
  SubsetReport all, occluded, unoccluded;
};

SubsetReport summarize(std::span<const EvalRecord> records, double threshold, std::span<const double> sdr_thresholds);

/// `occluded[k]` flags record k.
EvalReport build_report(std::span<const EvalRecord> records, const std::vector<bool>& occluded, double threshold,
                        std::span<const double> sdr_thresholds);

nlohmann::json to_json(const EvalReport& report);

/// Columns: nme, cumulative_fraction. One row per record, in sorted order.
std::string ced_csv(const CedCurve& curve);
/// Parses the CSV written by ced_csv.
CedCurve read_ced_csv(const std::string& path);

/// Step plot of one or more curves over [0, max_error].
std::string ced_svg(std::span<const std::pair<std::string, CedCurve>> curves, double max_error);

nlohmann::json topology_json(std::span<const Edge> edges, std::size_t k, std::size_t node_count);
/// Edges drawn over `shape`, stroke opacity proportional to |weight|.
std::string topology_svg(std::span<const Edge> edges, const LandmarkSet& shape, double width, double height);

nlohmann::json trace_json(const CascadeTrace& trace);

}  // namespace dag
