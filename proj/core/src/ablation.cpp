#include "dag/ablation.hpp"

#include <cstdio>

#include "dag/errors.hpp"
#include "dag/training.hpp"

namespace dag {

std::string to_string(AblationGrid grid) {
  switch (grid) {
    case AblationGrid::connectivity: return "connectivity";
    case AblationGrid::steps: return "steps";
    case AblationGrid::transform: return "transform";
  }
  return "?";
}

AblationGrid parse_ablation_grid(const std::string& text) {
  if (text == "connectivity") return AblationGrid::connectivity;
  if (text == "steps") return AblationGrid::steps;
  if (text == "transform") return AblationGrid::transform;
  throw ConfigError("unknown ablation grid '" + text + "' (expected connectivity, steps or transform)");
}

std::vector<AblationCell> ablation_cells(AblationGrid grid, const ModelConfig& base) {
  std::vector<AblationCell> cells;
  switch (grid) {
    case AblationGrid::connectivity:
      for (ConnectivityMode mode : {ConnectivityMode::self, ConnectivityMode::uniform, ConnectivityMode::learned}) {
        for (bool shape : {true, false}) {
          ModelConfig m = base;
          m.connectivity = mode;
          m.shape_features = shape;
          cells.push_back({to_string(mode) + (shape ? "+shape" : "-shape"), m});
        }
      }
      break;
    case AblationGrid::steps:
      for (std::size_t steps : {1, 3, 5, 7}) {
        ModelConfig m = base;
        m.local_steps = steps;
        cells.push_back({"T=" + std::to_string(steps), m});
      }
      break;
    case AblationGrid::transform:
      for (TransformKind kind : {TransformKind::perspective, TransformKind::affine}) {
        ModelConfig m = base;
        m.transform = kind;
        cells.push_back({to_string(kind), m});
      }
      break;
  }
  return cells;
}

namespace {

std::optional<double> subset_nme(std::span<const EvalRecord> records, std::span<const SampleRecord> samples, bool occluded) {
  std::vector<EvalRecord> picked;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (samples[k].occluded == occluded) picked.push_back(records[k]);
  }
  if (picked.empty()) return std::nullopt;
  return mean_nme(picked);
}

}  // namespace

std::vector<AblationRow> run_ablation(AblationGrid grid, const RunConfig& base, const AblationSplits& splits,
                                      std::span<const std::uint64_t> seeds, const AblationProgress& progress) {
  require(!splits.train.empty() && !splits.test.empty(), "run_ablation: train and test splits must be non-empty");
  std::vector<LandmarkSet> shapes;
  for (const SampleRecord& r : splits.train) shapes.push_back(r.landmarks);
  const LandmarkSet mean_shape = compute_mean_shape(shapes, static_cast<double>(base.model.image_width),
                                                    static_cast<double>(base.model.image_height));
  std::vector<AblationRow> rows;
  for (std::uint64_t seed : seeds) {
    for (const AblationCell& cell : ablation_cells(grid, base.model)) {
      AblationRow row;
      row.grid = to_string(grid);
      row.cell = cell.label;
      row.seed = seed;
      ModelConfig model_config = cell.model;
      model_config.init_seed = seed;
      TrainConfig train_config = base.train;
      train_config.shuffle_seed = seed;
      train_config.augment_seed = seed;
      try {
        DagModel model(model_config, mean_shape);
        train(model, splits.train, splits.val, train_config);
        const std::vector<EvalRecord> records = predict_records(model, splits.test);
        row.test_nme = mean_nme(records);
        row.occluded_nme = subset_nme(records, splits.test, true);
        row.unoccluded_nme = subset_nme(records, splits.test, false);
      } catch (const TrainingAborted& e) {
        row.failed = true;
        row.error = e.what();
      } catch (const DegenerateTransform& e) {
        row.failed = true;
        row.error = e.what();
      }
      if (progress) progress(row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<AblationMean> ablation_means(std::span<const AblationRow> rows) {
  std::vector<AblationMean> means;
  std::vector<std::size_t> occ_count, clear_count;
  for (const AblationRow& row : rows) {
    std::size_t k = 0;
    while (k < means.size() && means[k].cell != row.cell) ++k;
    if (k == means.size()) {
      AblationMean fresh;
      fresh.cell = row.cell;
      means.push_back(fresh);
      occ_count.push_back(0);
      clear_count.push_back(0);
    }
    if (row.failed) continue;
    AblationMean& m = means[k];
    ++m.runs;
    m.test_nme += row.test_nme;
    if (row.occluded_nme) {
      m.occluded_nme = m.occluded_nme.value_or(0.0) + *row.occluded_nme;
      ++occ_count[k];
    }
    if (row.unoccluded_nme) {
      m.unoccluded_nme = m.unoccluded_nme.value_or(0.0) + *row.unoccluded_nme;
      ++clear_count[k];
    }
  }
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (means[k].runs) means[k].test_nme /= static_cast<double>(means[k].runs);
    if (means[k].occluded_nme) *means[k].occluded_nme /= static_cast<double>(occ_count[k]);
    if (means[k].unoccluded_nme) *means[k].unoccluded_nme /= static_cast<double>(clear_count[k]);
  }
  return means;
}

std::string ablation_csv(std::span<const AblationRow> rows) {
  auto num = [](std::optional<double> v) {
    if (!v) return std::string();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return std::string(buf);
  };
  std::string out = "grid,cell,seed,status,test_nme,occluded_nme,unoccluded_nme\n";
  for (const AblationRow& r : rows) {
    out += r.grid + "," + r.cell + "," + std::to_string(r.seed) + "," + (r.failed ? "failed" : "ok") + ",";
    out += r.failed ? ",," : num(r.test_nme) + "," + num(r.occluded_nme) + "," + num(r.unoccluded_nme);
    out += "\n";
  }
  const std::string grid = rows.empty() ? std::string() : rows.front().grid;
  for (const AblationMean& m : ablation_means(rows)) {
    out += grid + "," + m.cell + ",mean," + (m.runs ? "ok" : "failed") + ",";
    out += m.runs ? num(m.test_nme) + "," + num(m.occluded_nme) + "," + num(m.unoccluded_nme) : ",,";
    out += "\n";
  }
  return out;
}

}  // namespace dag
