#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dag/config.hpp"
#include "dag/synth.hpp"

namespace dag {

enum class AblationGrid {
  connectivity,  // {self, uniform, learned} x {shape features on, off}
  steps,         // local steps {1, 3, 5, 7}
  transform,     // {perspective, affine}
};

std::string to_string(AblationGrid grid);
AblationGrid parse_ablation_grid(const std::string& text);

struct AblationCell {
  std::string label;
  ModelConfig model;
};

/// Cells of `grid` in a fixed order, each a copy of `base` with one axis changed.
std::vector<AblationCell> ablation_cells(AblationGrid grid, const ModelConfig& base);

struct AblationRow {
  std::string grid;
  std::string cell;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double test_nme = 0.0;
  std::optional<double> occluded_nme;
  std::optional<double> unoccluded_nme;
};

struct AblationSplits {
  std::span<const SampleRecord> train, val, test;
};

using AblationProgress = std::function<void(const AblationRow&)>;

/// Trains every cell once per seed. The seed drives model init, shuffling and
/// augmentation. A cell whose training aborts is recorded as failed and the
/// sweep moves on.
std::vector<AblationRow> run_ablation(AblationGrid grid, const RunConfig& base, const AblationSplits& splits,
                                      std::span<const std::uint64_t> seeds, const AblationProgress& progress = {});

struct AblationMean {
  std::string cell;
  std::size_t runs = 0;  // successful seeds
  double test_nme = 0.0;
  std::optional<double> occluded_nme;
  std::optional<double> unoccluded_nme;
};

/// Per-cell means over successful seeds, in first-appearance order.
std::vector<AblationMean> ablation_means(std::span<const AblationRow> rows);

/// Columns grid,cell,seed,status,test_nme,occluded_nme,unoccluded_nme; per-seed
/// rows followed by one "mean" row per cell.
std::string ablation_csv(std::span<const AblationRow> rows);

}  // namespace dag
