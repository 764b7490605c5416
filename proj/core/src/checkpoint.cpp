#include "dag/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "dag/config.hpp"
#include "dag/errors.hpp"

namespace dag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'D', 'A', 'G', 'C', 'K', 'P', 'T', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

struct Entry {
  std::string name;
  const Tensor* tensor;
};

std::vector<Entry> entries(DagModel& model, const OptimizerState& state) {
  std::vector<Entry> out;
  const std::vector<Parameter*> params = model.parameters();
  for (const Parameter* p : params) out.push_back({p->name, &p->value});
  for (std::size_t k = 0; k < params.size(); ++k) out.push_back({"adam.first/" + params[k]->name, &state.first_moment[k]});
  for (std::size_t k = 0; k < params.size(); ++k) out.push_back({"adam.second/" + params[k]->name, &state.second_moment[k]});
  return out;
}

}  // namespace

void save_checkpoint(const fs::path& path, DagModel& model, const OptimizerState& state, const CheckpointMeta& meta) {
  const std::size_t nparams = model.parameters().size();
  require(state.first_moment.size() == nparams && state.second_moment.size() == nparams,
          "save_checkpoint: optimizer state does not match the model");
  const std::vector<Entry> list = entries(model, state);
  json tensors = json::array();
  std::size_t offset = 0;
  for (const Entry& e : list) {
    tensors.push_back(json{{"name", e.name}, {"shape", e.tensor->shape()}, {"offset", offset}});
    offset += e.tensor->size();
  }
  json mean = json::array();
  for (const Point2& p : model.mean_shape().points) mean.push_back({p.x, p.y});
  const AdamConfig& a = state.config;
  const json header{{"format_version", kCheckpointVersion},
                    {"epoch", meta.epoch},
                    {"dataset_seed", meta.dataset_seed},
                    {"config", model.config()},
                    {"mean_shape", mean},
                    {"tensors", tensors},
                    {"optimizer",
                     {{"step", state.step},
                      {"beta1", a.beta1},
                      {"beta2", a.beta2},
                      {"epsilon", a.epsilon},
                      {"weight_decay", a.weight_decay}}}};
  const std::string text = header.dump();

  std::string bytes(kMagic, sizeof kMagic);
  put_u64(bytes, text.size());
  bytes += text;
  bytes.reserve(bytes.size() + 8 * offset);
  for (const Entry& e : list)
    for (double v : e.tensor->values()) put_u64(bytes, std::bit_cast<std::uint64_t>(v));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  const std::string file = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(file, 0, "cannot open checkpoint");
  const std::vector<unsigned char> b(std::istreambuf_iterator<char>(in), {});
  if (b.size() < 8 || std::memcmp(b.data(), kMagic, 7) != 0) throw ParseError(file, 0, "not a checkpoint (bad magic)");
  if (b[7] != static_cast<unsigned char>(kMagic[7]))
    throw IncompatibleCheckpoint(file + ": unsupported checkpoint format '" + std::string(b.begin(), b.begin() + 8) + "'");
  if (b.size() < 16) throw ParseError(file, b.size(), "truncated before header length");
  const std::uint64_t header_len = get_u64(b.data() + 8);
  if (header_len > b.size() - 16) throw ParseError(file, b.size(), "truncated inside header");
  json header;
  try {
    header = json::parse(b.begin() + 16, b.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const json::parse_error& e) {
    throw ParseError(file, 16 + e.byte, e.what());
  }

  LoadedCheckpoint out;
  const std::size_t payload = 16 + header_len;
  try {
    const auto version = header.at("format_version").get<std::uint32_t>();
    if (version != kCheckpointVersion)
      throw IncompatibleCheckpoint(file + ": format version " + std::to_string(version) + ", expected " +
                                   std::to_string(kCheckpointVersion));
    ModelConfig config = header.at("config").get<ModelConfig>();
    LandmarkSet mean;
    for (const json& p : header.at("mean_shape")) mean.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    out.model = std::make_unique<DagModel>(config, mean);
    out.meta.epoch = header.at("epoch").get<std::size_t>();
    out.meta.dataset_seed = header.at("dataset_seed").get<std::uint64_t>();
    const json& opt = header.at("optimizer");
    AdamConfig adam{opt.at("beta1").get<double>(), opt.at("beta2").get<double>(), opt.at("epsilon").get<double>(),
                    opt.at("weight_decay").get<double>()};
    const std::vector<Parameter*> params = out.model->parameters();
    out.state = make_optimizer(params, adam);
    out.state.step = opt.at("step").get<std::uint64_t>();

    std::vector<Tensor*> targets;
    std::vector<std::string> names;
    for (Parameter* p : params) targets.push_back(&p->value), names.push_back(p->name);
    for (std::size_t k = 0; k < params.size(); ++k)
      targets.push_back(&out.state.first_moment[k]), names.push_back("adam.first/" + params[k]->name);
    for (std::size_t k = 0; k < params.size(); ++k)
      targets.push_back(&out.state.second_moment[k]), names.push_back("adam.second/" + params[k]->name);

    const json& tensors = header.at("tensors");
    if (tensors.size() != targets.size())
      throw IncompatibleCheckpoint(file + ": " + std::to_string(tensors.size()) + " tensors stored, model needs " +
                                   std::to_string(targets.size()));
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const json& t = tensors[k];
      const std::string name = t.at("name").get<std::string>();
      if (name != names[k]) throw IncompatibleCheckpoint(file + ": tensor " + std::to_string(k) + " is '" + name + "', expected '" + names[k] + "'");
      const Shape shape = t.at("shape").get<Shape>();
      if (shape != targets[k]->shape())
        throw IncompatibleCheckpoint(file + ": tensor '" + name + "' has shape " + shape_string(shape) + ", model expects " +
                                     shape_string(targets[k]->shape()));
      const std::size_t start = payload + 8 * t.at("offset").get<std::size_t>();
      const std::size_t count = targets[k]->size();
      if (start > b.size() || (b.size() - start) / 8 < count)
        throw ParseError(file, b.size(), "truncated payload in tensor '" + name + "'");
      double* dst = targets[k]->data();
      for (std::size_t i = 0; i < count; ++i) dst[i] = std::bit_cast<double>(get_u64(b.data() + start + 8 * i));
    }
  } catch (const json::exception& e) {
    throw ParseError(file, 16, std::string("malformed header: ") + e.what());
  } catch (const ConfigError& e) {
    throw IncompatibleCheckpoint(file + ": " + e.what());
  }
  return out;
}

}  // namespace dag
