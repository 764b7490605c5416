#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <nlohmann/json.hpp>

#include "dag/cascade.hpp"
#include "dag/synth.hpp"
#include "dag/training.hpp"

namespace dag {

struct DataConfig {
  std::uint64_t seed = 7;
  std::size_t train = 512;
  std::size_t val = 128;
  std::size_t test = 128;
  SynthParams generator;
};

struct PathsConfig {
  std::string data_dir = "data";
  std::string out_dir = "run";
};

/// Everything a command needs. Every field has a default.
struct RunConfig {
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  PathsConfig paths;

  /// Cross-field checks (image size agreement, positive counts).
  void validate() const;
};

std::string to_string(TransformKind kind);
std::string to_string(ConnectivityMode mode);
TransformKind parse_transform_kind(const std::string& text);
ConnectivityMode parse_connectivity(const std::string& text);

// Readers accept partial documents and throw ConfigError on unknown keys or
// mistyped values, naming the offending path.
void to_json(nlohmann::json& j, const SynthParams& p);
void from_json(const nlohmann::json& j, SynthParams& p);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

/// Overlays `patch` onto `base`; same strictness as from_json.
void merge_config(RunConfig& base, const nlohmann::json& patch);
RunConfig load_run_config(const std::string& path);

}  // namespace dag
