#include "dag/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "dag/errors.hpp"

namespace dag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

void skip_space(const std::vector<unsigned char>& b, std::size_t& pos) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
}

std::size_t read_header_number(const std::vector<unsigned char>& b, std::size_t& pos, const fs::path& path,
                               const char* field) {
  skip_space(b, pos);
  const std::size_t start = pos;
  std::size_t value = 0;
  while (pos < b.size() && std::isdigit(b[pos])) {
    value = value * 10 + static_cast<std::size_t>(b[pos] - '0');
    if (value > 1'000'000) throw ParseError(path.string(), start, std::string("greymap ") + field + " too large");
    ++pos;
  }
  if (pos == start) throw ParseError(path.string(), start, std::string("expected greymap ") + field);
  return value;
}

json params_to_json(const SynthParams& p) {
  return json{{"width", p.width},
              {"height", p.height},
              {"max_rotation_deg", p.max_rotation_deg},
              {"min_scale", p.min_scale},
              {"max_scale", p.max_scale},
              {"max_translation", p.max_translation},
              {"max_projective", p.max_projective},
              {"landmark_jitter", p.landmark_jitter},
              {"occlusion_rate", p.occlusion_rate},
              {"min_occlusion", p.min_occlusion},
              {"max_occlusion", p.max_occlusion},
              {"occlusion_gray", p.occlusion_gray},
              {"stroke_peak", p.stroke_peak},
              {"stroke_sigma", p.stroke_sigma},
              {"blob_peak", p.blob_peak},
              {"blob_sigma", p.blob_sigma},
              {"background", p.background},
              {"noise_sigma", p.noise_sigma},
              {"max_outside_fraction", p.max_outside_fraction},
              {"max_attempts", p.max_attempts}};
}

SynthParams params_from_json(const json& j) {
  SynthParams p;
  p.width = j.at("width").get<std::size_t>();
  p.height = j.at("height").get<std::size_t>();
  p.max_rotation_deg = j.at("max_rotation_deg").get<double>();
  p.min_scale = j.at("min_scale").get<double>();
  p.max_scale = j.at("max_scale").get<double>();
  p.max_translation = j.at("max_translation").get<double>();
  p.max_projective = j.at("max_projective").get<double>();
  p.landmark_jitter = j.at("landmark_jitter").get<double>();
  p.occlusion_rate = j.at("occlusion_rate").get<double>();
  p.min_occlusion = j.at("min_occlusion").get<double>();
  p.max_occlusion = j.at("max_occlusion").get<double>();
  p.occlusion_gray = j.at("occlusion_gray").get<double>();
  p.stroke_peak = j.at("stroke_peak").get<double>();
  p.stroke_sigma = j.at("stroke_sigma").get<double>();
  p.blob_peak = j.at("blob_peak").get<double>();
  p.blob_sigma = j.at("blob_sigma").get<double>();
  p.background = j.at("background").get<double>();
  p.noise_sigma = j.at("noise_sigma").get<double>();
  p.max_outside_fraction = j.at("max_outside_fraction").get<double>();
  p.max_attempts = j.at("max_attempts").get<std::size_t>();
  return p;
}

std::string image_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "images/%05zu.pgm", index);
  return buf;
}

}  // namespace

void write_pgm(const fs::path& path, const Image& image) {
  require(image.pixels.size() == image.width * image.height, "write_pgm: pixel buffer size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm: cannot open " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<unsigned char> bytes(image.pixels.size());
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(image.pixels[i], 0.0, 1.0) * 255.0));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write_pgm: write failed for " + path.string());
}

Image read_pgm(const fs::path& path) {
  const std::vector<unsigned char> b = read_bytes(path);
  if (b.size() < 2 || b[0] != 'P' || b[1] != '5') throw ParseError(path.string(), 0, "missing P5 magic");
  std::size_t pos = 2;
  const std::size_t width = read_header_number(b, pos, path, "width");
  const std::size_t height = read_header_number(b, pos, path, "height");
  const std::size_t maxval = read_header_number(b, pos, path, "maxval");
  if (maxval != 255) throw ParseError(path.string(), pos, "maxval must be 255, got " + std::to_string(maxval));
  if (pos >= b.size() || !std::isspace(b[pos])) throw ParseError(path.string(), pos, "expected whitespace after maxval");
  ++pos;
  if (b.size() - pos != width * height)
    throw ParseError(path.string(), b.size(), "expected " + std::to_string(width * height) + " pixel bytes, found " +
                                                  std::to_string(b.size() - pos));
  Image img(height, width);
  for (std::size_t i = 0; i < width * height; ++i) img.pixels[i] = static_cast<double>(b[pos + i]) / 255.0;
  return img;
}

void write_dataset(const fs::path& dir, const Dataset& dataset) {
  fs::create_directories(dir / "images");
  const Template& tmpl = landmark_template();
  json entries = json::array();
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const SampleRecord& r = dataset.records[i];
    const std::string name = image_name(i);
    write_pgm(dir / name, r.image);
    json pts = json::array();
    for (const Point2& p : r.landmarks.points) pts.push_back({p.x, p.y});
    entries.push_back(json{{"image", name},
                           {"landmarks", pts},
                           {"occluded", r.occluded},
                           {"occlusion", {r.occlusion.x, r.occlusion.y, r.occlusion.width, r.occlusion.height}},
                           {"norm_pair", {tmpl.norm_pair.first, tmpl.norm_pair.second}},
                           {"seed", r.seed}});
  }
  json tpts = json::array();
  for (const Point2& p : tmpl.points.points) tpts.push_back({p.x, p.y});
  json edges = json::array();
  for (const auto& [a, b] : tmpl.edges) edges.push_back({a, b});
  const json manifest{{"split", dataset.split},
                      {"template", {{"landmarks", tpts}, {"edges", edges}, {"flip_permutation", tmpl.flip_permutation}}},
                      {"generator", {{"seed", dataset.dataset_seed}, {"params", params_to_json(dataset.params)}}},
                      {"entries", entries}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("write_dataset: cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(1) << '\n';
}

Dataset read_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  const std::vector<unsigned char> bytes = read_bytes(manifest_path);
  json manifest;
  try {
    manifest = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(manifest_path.string(), e.byte, e.what());
  }
  Dataset ds;
  try {
    ds.split = manifest.at("split").get<std::string>();
    ds.dataset_seed = manifest.at("generator").at("seed").get<std::uint64_t>();
    ds.params = params_from_json(manifest.at("generator").at("params"));
    for (const json& e : manifest.at("entries")) {
      SampleRecord r;
      const fs::path image_path = dir / e.at("image").get<std::string>();
      if (!fs::exists(image_path)) throw ParseError(image_path.string(), 0, "listed in manifest but missing on disk");
      r.image = read_pgm(image_path);
      for (const json& p : e.at("landmarks")) r.landmarks.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      r.occluded = e.at("occluded").get<bool>();
      const json& o = e.at("occlusion");
      r.occlusion = Rect{o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>(), o.at(3).get<double>()};
      r.seed = e.at("seed").get<std::uint64_t>();
      ds.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    // Structural errors carry no position; report the document start.
    throw ParseError(manifest_path.string(), 0, e.what());
  }
  return ds;
}

}  // namespace dag
