#include "dag/config.hpp"

#include <fstream>
#include <set>
#include <type_traits>

#include "dag/errors.hpp"

namespace dag {

using nlohmann::json;

std::string to_string(TransformKind kind) { return kind == TransformKind::perspective ? "perspective" : "affine"; }

std::string to_string(ConnectivityMode mode) {
  switch (mode) {
    case ConnectivityMode::self: return "self";
    case ConnectivityMode::uniform: return "uniform";
    case ConnectivityMode::learned: return "learned";
  }
  return "learned";
}

TransformKind parse_transform_kind(const std::string& text) {
  if (text == "perspective") return TransformKind::perspective;
  if (text == "affine") return TransformKind::affine;
  throw ConfigError("unknown transform kind '" + text + "' (expected perspective or affine)");
}

ConnectivityMode parse_connectivity(const std::string& text) {
  if (text == "self") return ConnectivityMode::self;
  if (text == "uniform") return ConnectivityMode::uniform;
  if (text == "learned") return ConnectivityMode::learned;
  throw ConfigError("unknown connectivity mode '" + text + "' (expected self, uniform or learned)");
}

namespace {

template <class S, class V>
void fields(S& p, V&& v) requires std::is_same_v<std::remove_const_t<S>, SynthParams> {
  v("width", p.width);
  v("height", p.height);
  v("max_rotation_deg", p.max_rotation_deg);
  v("min_scale", p.min_scale);
  v("max_scale", p.max_scale);
  v("max_translation", p.max_translation);
  v("max_projective", p.max_projective);
  v("landmark_jitter", p.landmark_jitter);
  v("occlusion_rate", p.occlusion_rate);
  v("min_occlusion", p.min_occlusion);
  v("max_occlusion", p.max_occlusion);
  v("occlusion_gray", p.occlusion_gray);
  v("stroke_peak", p.stroke_peak);
  v("stroke_sigma", p.stroke_sigma);
  v("blob_peak", p.blob_peak);
  v("blob_sigma", p.blob_sigma);
  v("background", p.background);
  v("noise_sigma", p.noise_sigma);
  v("max_outside_fraction", p.max_outside_fraction);
  v("max_attempts", p.max_attempts);
}

template <class S, class V>
void fields(S& c, V&& v) requires std::is_same_v<std::remove_const_t<S>, ModelConfig> {
  v("landmarks", c.landmarks);
  v("image_width", c.image_width);
  v("image_height", c.image_height);
  v("feature_channels", c.feature_channels);
  v("hidden_width", c.hidden_width);
  v("head_hidden", c.head_hidden);
  v("gcn_blocks", c.gcn_blocks);
  v("local_steps", c.local_steps);
  v("transform", c.transform);
  v("connectivity", c.connectivity);
  v("shape_features", c.shape_features);
  v("margin", c.margin);
  v("lambda_global", c.lambda_global);
  v("lambda_local", c.lambda_local);
  v("intermediate_supervision", c.intermediate_supervision);
  v("init_seed", c.init_seed);
}

template <class S, class V>
void fields(S& c, V&& v) requires std::is_same_v<std::remove_const_t<S>, AdamConfig> {
  v("beta1", c.beta1);
  v("beta2", c.beta2);
  v("epsilon", c.epsilon);
  v("weight_decay", c.weight_decay);
}

template <class S, class V>
void fields(S& c, V&& v) requires std::is_same_v<std::remove_const_t<S>, AugmentRanges> {
  v("max_rotation_deg", c.max_rotation_deg);
  v("flip_probability", c.flip_probability);
  v("min_scale", c.min_scale);
  v("max_scale", c.max_scale);
}

template <class S, class V>
void fields(S& c, V&& v) requires std::is_same_v<std::remove_const_t<S>, TrainConfig> {
  v("epochs", c.epochs);
  v("batch_size", c.batch_size);
  v("base_lr", c.base_lr);
  v("decay_every", c.decay_every);
  v("decay_factor", c.decay_factor);
  v("adam", c.adam);
  v("augment", c.augment);
  v("augment_ranges", c.augment_ranges);
  v("shuffle_seed", c.shuffle_seed);
  v("augment_seed", c.augment_seed);
  v("max_skip_fraction", c.max_skip_fraction);
  v("track_clean_loss", c.track_clean_loss);
}

template <class S, class V>
void fields(S& c, V&& v) requires std::is_same_v<std::remove_const_t<S>, DataConfig> {
  v("seed", c.seed);
  v("train", c.train);
  v("val", c.val);
  v("test", c.test);
  v("generator", c.generator);
}

template <class S, class V>
void fields(S& c, V&& v) requires std::is_same_v<std::remove_const_t<S>, PathsConfig> {
  v("data_dir", c.data_dir);
  v("out_dir", c.out_dir);
}

template <class S, class V>
void fields(S& c, V&& v) requires std::is_same_v<std::remove_const_t<S>, RunConfig> {
  v("data", c.data);
  v("model", c.model);
  v("train", c.train);
  v("paths", c.paths);
}

template <class T>
concept Record = requires(T& t) { fields(t, [](const char*, auto&) {}); };

template <class T>
json encode(const T& value);

struct Writer {
  json& out;
  template <class T>
  void operator()(const char* key, const T& value) {
    out[key] = encode(value);
  }
};

template <class T>
json encode(const T& value) {
  if constexpr (Record<T>) {
    json j = json::object();
    fields(value, Writer{j});
    return j;
  } else if constexpr (std::is_enum_v<T>) {
    return to_string(value);
  } else {
    return json(value);
  }
}

template <class T>
void decode(const json& j, T& value, const std::string& path);

struct Reader {
  const json& in;
  const std::string& path;
  std::set<std::string>& known;
  template <class T>
  void operator()(const char* key, T& value) {
    known.insert(key);
    if (in.contains(key)) decode(in.at(key), value, path.empty() ? std::string(key) : path + "." + key);
  }
};

[[noreturn]] void type_error(const std::string& path, const char* expected) {
  throw ConfigError("config key '" + path + "' must be " + expected);
}

template <class T>
void decode(const json& j, T& value, const std::string& path) {
  if constexpr (Record<T>) {
    if (!j.is_object()) type_error(path.empty() ? "<root>" : path, "an object");
    std::set<std::string> known;
    fields(value, Reader{j, path, known});
    for (const auto& [key, _] : j.items()) {
      if (!known.count(key)) throw ConfigError("unknown config key '" + (path.empty() ? key : path + "." + key) + "'");
    }
  } else if constexpr (std::is_same_v<T, TransformKind>) {
    if (!j.is_string()) type_error(path, "a string");
    value = parse_transform_kind(j.get<std::string>());
  } else if constexpr (std::is_same_v<T, ConnectivityMode>) {
    if (!j.is_string()) type_error(path, "a string");
    value = parse_connectivity(j.get<std::string>());
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) type_error(path, "a boolean");
    value = j.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) type_error(path, "a string");
    value = j.get<std::string>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_unsigned()) type_error(path, "a non-negative integer");
    value = j.get<T>();
  } else {
    if (!j.is_number()) type_error(path, "a number");
    value = j.get<T>();
  }
}

}  // namespace

void RunConfig::validate() const {
  if (model.image_width != data.generator.width || model.image_height != data.generator.height)
    throw ConfigError("model image size " + std::to_string(model.image_width) + "x" + std::to_string(model.image_height) +
                      " does not match generator size " + std::to_string(data.generator.width) + "x" +
                      std::to_string(data.generator.height));
  if (model.landmarks != landmark_template().points.size())
    throw ConfigError("model.landmarks must equal the template size " + std::to_string(landmark_template().points.size()));
  if (train.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (train.decay_every == 0) throw ConfigError("train.decay_every must be positive");
  if (model.gcn_blocks == 0) throw ConfigError("model.gcn_blocks must be positive");
  if (model.feature_channels == 0 || model.hidden_width == 0 || model.head_hidden == 0)
    throw ConfigError("model widths must be positive");
  if (model.image_width % kBackboneStride != 0 || model.image_height % kBackboneStride != 0)
    throw ConfigError("image size must be divisible by " + std::to_string(kBackboneStride));
}

void to_json(json& j, const SynthParams& p) { j = encode(p); }
void from_json(const json& j, SynthParams& p) { decode(j, p, ""); }
void to_json(json& j, const ModelConfig& c) { j = encode(c); }
void from_json(const json& j, ModelConfig& c) { decode(j, c, ""); }
void to_json(json& j, const TrainConfig& c) { j = encode(c); }
void from_json(const json& j, TrainConfig& c) { decode(j, c, ""); }
void to_json(json& j, const RunConfig& c) { j = encode(c); }
void from_json(const json& j, RunConfig& c) { decode(j, c, ""); }

void merge_config(RunConfig& base, const json& patch) { decode(patch, base, ""); }

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path, e.byte, e.what());
  }
  RunConfig c;
  merge_config(c, j);
  return c;
}

}  // namespace dag
