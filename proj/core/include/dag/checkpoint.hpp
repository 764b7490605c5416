#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>

#include "dag/cascade.hpp"
#include "dag/training.hpp"

namespace dag {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::size_t epoch = 0;
  std::uint64_t dataset_seed = 0;
};

/// "DAGCKPT1", u64 little-endian header length, JSON header (config, mean
/// shape, tensor names/shapes/offsets, optimizer scalars), then float64
/// little-endian payloads: parameters followed by both optimizer moments.
void save_checkpoint(const std::filesystem::path& path, DagModel& model, const OptimizerState& state,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
  std::unique_ptr<DagModel> model;
  OptimizerState state;
  CheckpointMeta meta;
};

/// Rebuilds the model from the stored config and checks every tensor's name
/// and shape against it. Throws ParseError on truncation or malformed header,
/// IncompatibleCheckpoint on version or shape mismatch.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dag
