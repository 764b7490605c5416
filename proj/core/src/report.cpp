#include "dag/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dag/errors.hpp"

namespace dag {

using nlohmann::json;

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json subset_json(const SubsetReport& s, std::span<const double> thresholds) {
  json sdr = json::object();
  for (std::size_t k = 0; k < s.sdr.size(); ++k) sdr[fmt("%g", thresholds[k])] = s.sdr[k];
  return json{{"count", s.count},
              {"nme", optional_number(s.nme)},
              {"failure_rate", optional_number(s.failure_rate)},
              {"auc", optional_number(s.auc)},
              {"mre", optional_number(s.mre)},
              {"sdr", s.count ? sdr : json(nullptr)},
              {"hausdorff_mean", optional_number(s.hausdorff_mean)},
              {"radial_std", optional_number(s.radial_std)}};
}

}  // namespace

SubsetReport summarize(std::span<const EvalRecord> records, double threshold, std::span<const double> sdr_thresholds) {
  SubsetReport s;
  s.count = records.size();
  if (records.empty()) return s;
  double total = 0.0, haus = 0.0;
  for (const EvalRecord& r : records) {
    total += nme(r);
    haus += hausdorff(r);
  }
  s.nme = total / static_cast<double>(records.size());
  s.failure_rate = failure_rate(records, threshold);
  s.auc = auc(records, threshold);
  s.mre = mre(records);
  s.hausdorff_mean = haus / static_cast<double>(records.size());
  if (radial_errors(records).size() >= 2) s.radial_std = radial_std(records);
  s.sdr = sdr(records, sdr_thresholds);
  return s;
}

EvalReport build_report(std::span<const EvalRecord> records, const std::vector<bool>& occluded, double threshold,
                        std::span<const double> sdr_thresholds) {
  require(occluded.size() == records.size(), "build_report: occlusion flags do not match records");
  EvalReport report;
  report.threshold = threshold;
  report.sdr_thresholds.assign(sdr_thresholds.begin(), sdr_thresholds.end());
  std::vector<EvalRecord> occ, clear;
  for (std::size_t k = 0; k < records.size(); ++k) (occluded[k] ? occ : clear).push_back(records[k]);
  report.all = summarize(records, threshold, sdr_thresholds);
  report.occluded = summarize(occ, threshold, sdr_thresholds);
  report.unoccluded = summarize(clear, threshold, sdr_thresholds);
  return report;
}

json to_json(const EvalReport& r) {
  return json{{"threshold", r.threshold},
              {"sdr_thresholds", r.sdr_thresholds},
              {"all", subset_json(r.all, r.sdr_thresholds)},
              {"occluded", subset_json(r.occluded, r.sdr_thresholds)},
              {"unoccluded", subset_json(r.unoccluded, r.sdr_thresholds)}};
}

std::string ced_csv(const CedCurve& curve) {
  std::string out = "nme,cumulative_fraction\n";
  const double n = static_cast<double>(curve.count());
  char buf[96];
  for (std::size_t k = 0; k < curve.count(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", curve.values[k], static_cast<double>(k + 1) / n);
    out += buf;
  }
  return out;
}

CedCurve read_ced_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open CED file");
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(in, line) || line != "nme,cumulative_fraction") throw ParseError(path, 0, "missing CED header");
  offset += line.size() + 1;
  CedCurve curve;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      const auto comma = line.find(',');
      try {
        if (comma == std::string::npos) throw std::invalid_argument("no comma");
        curve.values.push_back(std::stod(line.substr(0, comma)));
      } catch (const std::exception&) {
        throw ParseError(path, offset, "malformed CED row");
      }
    }
    offset += line.size() + 1;
  }
  if (!std::is_sorted(curve.values.begin(), curve.values.end())) throw ParseError(path, 0, "CED values are not sorted");
  return curve;
}

std::string ced_svg(std::span<const std::pair<std::string, CedCurve>> curves, double max_error) {
  require(max_error > 0.0, "ced_svg: max_error must be positive");
  const double w = 480, h = 360, left = 50, right = 20, top = 20, bottom = 40;
  const double pw = w - left - right, ph = h - top - bottom;
  auto px = [&](double x) { return left + pw * std::min(x, max_error) / max_error; };
  auto py = [&](double f) { return top + ph * (1.0 - f); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<path d=\"M" << left << ' ' << top << " V" << top + ph << " H" << left + pw << "\" stroke=\"black\" fill=\"none\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double x = max_error * t / 4.0;
    s << "<text x=\"" << px(x) << "\" y=\"" << h - 20 << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt("%g", x) << "</text>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << py(t / 4.0) + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << fmt("%g", t / 4.0)
      << "</text>\n";
  }
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 4 << "\" font-size=\"12\" text-anchor=\"middle\">NME</text>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const CedCurve& curve = curves[c].second;
    const double n = static_cast<double>(std::max<std::size_t>(curve.count(), 1));
    std::ostringstream d;
    d << "M" << px(0) << ' ' << py(0);
    double frac = 0.0;
    for (std::size_t k = 0; k < curve.count() && curve.values[k] <= max_error; ++k) {
      d << " H" << px(curve.values[k]);
      frac = static_cast<double>(k + 1) / n;
      d << " V" << py(frac);
    }
    d << " H" << px(max_error);
    const char* color = colors[c % 6];
    s << "<path d=\"" << d.str() << "\" stroke=\"" << color << "\" fill=\"none\" stroke-width=\"1.5\"/>\n";
    s << "<text x=\"" << left + 10 << "\" y=\"" << top + 14 + 14 * static_cast<double>(c) << "\" font-size=\"12\" fill=\"" << color
      << "\">" << curves[c].first << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

json topology_json(std::span<const Edge> edges, std::size_t k, std::size_t node_count) {
  json list = json::array();
  for (const Edge& e : edges) list.push_back(json{{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
  return json{{"k", k}, {"nodes", node_count}, {"edges", list}};
}

std::string topology_svg(std::span<const Edge> edges, const LandmarkSet& shape, double width, double height) {
  double strongest = 0.0;
  for (const Edge& e : edges) strongest = std::max(strongest, std::abs(e.weight));
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 4 * width << "\" height=\"" << 4 * height << "\" viewBox=\"0 0 "
    << width << ' ' << height << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const Edge& e : edges) {
    const Point2 a = shape[e.from], b = shape[e.to];
    const double opacity = strongest > 0.0 ? std::abs(e.weight) / strongest : 1.0;
    s << "<line x1=\"" << a.x << "\" y1=\"" << a.y << "\" x2=\"" << b.x << "\" y2=\"" << b.y
      << "\" stroke=\"" << (e.weight >= 0.0 ? "#1f77b4" : "#d62728") << "\" stroke-width=\"0.5\" stroke-opacity=\""
      << fmt("%.4f", opacity) << "\"/>\n";
  }
  for (std::size_t i = 0; i < shape.size(); ++i) {
    s << "<circle cx=\"" << shape[i].x << "\" cy=\"" << shape[i].y << "\" r=\"1.2\" fill=\"black\"/>\n";
    s << "<text x=\"" << shape[i].x + 1.5 << "\" y=\"" << shape[i].y - 1.5 << "\" font-size=\"3\">" << i << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

json trace_json(const CascadeTrace& trace) {
  json stages = json::array();
  for (const LandmarkSet& s : trace.stages) {
    json pts = json::array();
    for (const Point2& p : s.points) pts.push_back({p.x, p.y});
    stages.push_back(pts);
  }
  return json{{"stages", stages}, {"transform", trace.transform.m}};
}

}  // namespace dag
