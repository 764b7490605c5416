#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <nlohmann/json.hpp>

#include "dag/ablation.hpp"
#include "dag/checkpoint.hpp"
#include "dag/dataset.hpp"
#include "dag/errors.hpp"
#include "dag/report.hpp"
#include "dag/training.hpp"
#include "overrides.hpp"

namespace dag::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSplitNames[] = {"train", "val", "test"};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void banner(const std::string& command, const RunConfig* config, const json& options) {
  json b{{"command", command}, {"options", options}};
  if (config) b["config"] = *config;
  std::cerr << "effective config: " << b.dump() << "\n";
}

Dataset load_split(const RunConfig& config, const std::string& split) {
  return read_dataset(fs::path(config.paths.data_dir) / split);
}

/// Adopts the generator settings of an on-disk dataset so the banner shows
/// what the model actually sees.
void adopt_dataset(RunConfig& config, const Dataset& data) {
  config.data.seed = data.dataset_seed;
  config.data.generator = data.params;
  config.model.image_width = data.params.width;
  config.model.image_height = data.params.height;
  config.validate();
}

LandmarkSet training_mean_shape(const Dataset& train, const ModelConfig& model) {
  std::vector<LandmarkSet> shapes;
  for (const SampleRecord& r : train.records) shapes.push_back(r.landmarks);
  return compute_mean_shape(shapes, static_cast<double>(model.image_width), static_cast<double>(model.image_height));
}

void check_compatible(const DagModel& model, const Dataset& data) {
  if (data.records.empty()) throw std::runtime_error("dataset split '" + data.split + "' is empty");
  const std::size_t n = data.records.front().landmarks.size();
  if (n != model.config().landmarks)
    throw IncompatibleCheckpoint("checkpoint predicts " + std::to_string(model.config().landmarks) + " landmarks but dataset '" +
                                 data.split + "' has " + std::to_string(n));
  if (data.params.width != model.config().image_width || data.params.height != model.config().image_height)
    throw IncompatibleCheckpoint("checkpoint expects " + std::to_string(model.config().image_width) + "x" +
                                 std::to_string(model.config().image_height) + " images but dataset '" + data.split + "' has " +
                                 std::to_string(data.params.width) + "x" + std::to_string(data.params.height));
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + item + "'");
    }
  }
  return out;
}

void gen_data(CLI::App& app) {
  struct Opts {
    ConfigFlags flags;
    bool force = false;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("gen-data", "Generate train/val/test splits of synthetic landmark images");
  o->flags.add_config_file(*cmd);
  o->flags.add_data_flags(*cmd);
  o->flags.add_path_flags(*cmd, true, false);
  cmd->add_flag("--force", o->force, "overwrite an existing dataset directory");
  cmd->callback([o] {
    RunConfig config = o->flags.resolve();
    banner("gen-data", &config, {{"force", o->force}});
    const fs::path root = config.paths.data_dir;
    if (fs::exists(root) && !fs::is_empty(root)) {
      if (!o->force) throw std::runtime_error("refusing to overwrite non-empty " + root.string() + " (pass --force)");
      for (const char* split : kSplitNames) fs::remove_all(root / split);
    }
    const std::size_t counts[] = {config.data.train, config.data.val, config.data.test};
    for (std::size_t s = 0; s < 3; ++s) {
      Dataset data{kSplitNames[s], config.data.seed, config.data.generator,
                   generate_split(config.data.seed, s, counts[s], config.data.generator)};
      write_dataset(root / kSplitNames[s], data);
      const auto occluded = std::count_if(data.records.begin(), data.records.end(), [](const SampleRecord& r) { return r.occluded; });
      std::cout << kSplitNames[s] << ": " << data.records.size() << " images, " << occluded << " occluded -> "
                << (root / kSplitNames[s] / "manifest.json").string() << "\n";
    }
  });
}

void train_cmd(CLI::App& app) {
  struct Opts {
    ConfigFlags flags;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("train", "Train a model; writes checkpoint.bin, log.csv and config.json to the output directory");
  o->flags.add_config_file(*cmd);
  o->flags.add_model_flags(*cmd);
  o->flags.add_train_flags(*cmd);
  o->flags.add_path_flags(*cmd, true, true);
  cmd->callback([o] {
    RunConfig config = o->flags.resolve();
    const Dataset train_set = load_split(config, "train");
    const Dataset val_set = load_split(config, "val");
    adopt_dataset(config, train_set);
    banner("train", &config, json::object());
    DagModel model(config.model, training_mean_shape(train_set, config.model));
    const TrainResult result = dag::train(model, train_set.records, val_set.records, config.train, [](const EpochLog& e) {
      char line[160];
      std::snprintf(line, sizeof line, "epoch %zu lr %.3g loss %.5f val_nme %.5f skipped %zu\n", e.epoch, e.lr, e.train_loss,
                    e.val_nme, e.skipped_batches);
      std::cerr << line << std::flush;
    });
    const fs::path out = config.paths.out_dir;
    fs::create_directories(out);
    save_checkpoint(out / "checkpoint.bin", model, result.best_state, {result.best_epoch, config.data.seed});
    write_text(out / "log.csv", format_log_csv(result.log));
    write_text(out / "config.json", json(config).dump(2) + "\n");
    if (result.log.empty()) {
      std::cout << "no epochs run; wrote initial model to " << (out / "checkpoint.bin").string() << "\n";
    } else {
      std::printf("best epoch %zu val_nme %.6f final val_nme %.6f\n", result.best_epoch, result.best_val_nme,
                  result.log.back().val_nme);
    }
  });
}

void eval_cmd(CLI::App& app) {
  struct Opts {
    ConfigFlags flags;
    std::string checkpoint, split = "test", report, ced_csv, ced_svg, sdr = "2,4,6,8";
    double threshold = 0.1;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  o->flags.add_config_file(*cmd);
  o->flags.add_path_flags(*cmd, true, true);
  cmd->add_option("--checkpoint", o->checkpoint, "checkpoint file (default: <out-dir>/checkpoint.bin)");
  cmd->add_option("--split", o->split, "split to evaluate")->capture_default_str()->check(CLI::IsMember({"train", "val", "test"}));
  cmd->add_option("--threshold", o->threshold, "NME threshold for failure rate and AUC")->capture_default_str();
  cmd->add_option("--sdr", o->sdr, "comma-separated SDR radii in pixels")->capture_default_str();
  cmd->add_option("--report", o->report, "JSON report path (default: <out-dir>/eval_<split>.json)");
  cmd->add_option("--ced-csv", o->ced_csv, "CED CSV path (default: <out-dir>/ced_<split>.csv)");
  cmd->add_option("--ced-svg", o->ced_svg, "CED SVG path (default: <out-dir>/ced_<split>.svg)");
  cmd->callback([o] {
    RunConfig config = o->flags.resolve();
    const fs::path out = config.paths.out_dir;
    const fs::path ckpt = o->checkpoint.empty() ? out / "checkpoint.bin" : fs::path(o->checkpoint);
    const fs::path report_path = o->report.empty() ? out / ("eval_" + o->split + ".json") : fs::path(o->report);
    const fs::path csv_path = o->ced_csv.empty() ? out / ("ced_" + o->split + ".csv") : fs::path(o->ced_csv);
    const fs::path svg_path = o->ced_svg.empty() ? out / ("ced_" + o->split + ".svg") : fs::path(o->ced_svg);
    const std::vector<double> radii = parse_list(o->sdr);
    if (!(o->threshold > 0.0)) throw ConfigError("--threshold must be positive");
    banner("eval", &config,
           {{"checkpoint", ckpt.string()}, {"split", o->split}, {"threshold", o->threshold}, {"sdr", radii},
            {"report", report_path.string()}, {"ced_csv", csv_path.string()}, {"ced_svg", svg_path.string()}});
    LoadedCheckpoint loaded = load_checkpoint(ckpt);
    const Dataset data = load_split(config, o->split);
    check_compatible(*loaded.model, data);
    const std::vector<EvalRecord> records = predict_records(*loaded.model, data.records);
    std::vector<bool> occluded;
    for (const SampleRecord& r : data.records) occluded.push_back(r.occluded);
    const json report = to_json(build_report(records, occluded, o->threshold, radii));
    const CedCurve curve = ced(records);
    write_text(report_path, report.dump(2) + "\n");
    write_text(csv_path, ced_csv(curve));
    const std::pair<std::string, CedCurve> curves[] = {{o->split, curve}};
    write_text(svg_path, ced_svg(curves, o->threshold));
    std::cout << report.dump(2) << "\n";
  });
}

void predict_cmd(CLI::App& app) {
  struct Opts {
    std::string checkpoint, out;
    std::vector<std::string> images;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("predict", "Run the cascade on PGM images and emit per-stage landmark traces");
  cmd->add_option("--checkpoint", o->checkpoint, "checkpoint file")->required();
  cmd->add_option("--out", o->out, "write JSON here instead of stdout");
  cmd->add_option("images", o->images, "PGM images")->required();
  cmd->callback([o] {
    banner("predict", nullptr, {{"checkpoint", o->checkpoint}, {"out", o->out}, {"images", o->images}});
    LoadedCheckpoint loaded = load_checkpoint(o->checkpoint);
    json results = json::array();
    std::size_t failed = 0;
    for (const std::string& path : o->images) {
      json entry{{"image", path}};
      try {
        const Image image = read_pgm(path);
        if (image.width != loaded.model->config().image_width || image.height != loaded.model->config().image_height)
          throw std::runtime_error("image is " + std::to_string(image.width) + "x" + std::to_string(image.height) + ", model expects " +
                                   std::to_string(loaded.model->config().image_width) + "x" +
                                   std::to_string(loaded.model->config().image_height));
        entry["trace"] = trace_json(run_cascade(image, *loaded.model));
      } catch (const std::exception& e) {
        ++failed;
        entry["error"] = e.what();
        std::cerr << "dag predict: " << path << ": " << e.what() << "\n";
      }
      results.push_back(entry);
    }
    const std::string text = json{{"results", results}}.dump(2) + "\n";
    if (o->out.empty()) std::cout << text;
    else write_text(o->out, text);
    if (failed) throw std::runtime_error(std::to_string(failed) + " of " + std::to_string(o->images.size()) + " images failed");
  });
}

void export_graph_cmd(CLI::App& app) {
  struct Opts {
    std::string checkpoint, json_path, svg_path;
    std::size_t k = 3;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("export-graph", "Export the strongest learned connections per landmark");
  cmd->add_option("--checkpoint", o->checkpoint, "checkpoint file")->required();
  cmd->add_option("--k", o->k, "edges kept per landmark")->capture_default_str();
  cmd->add_option("--json", o->json_path, "topology JSON output")->required();
  cmd->add_option("--svg", o->svg_path, "topology SVG output");
  cmd->callback([o] {
    banner("export-graph", nullptr, {{"checkpoint", o->checkpoint}, {"k", o->k}, {"json", o->json_path}, {"svg", o->svg_path}});
    LoadedCheckpoint loaded = load_checkpoint(o->checkpoint);
    const DagModel& model = *loaded.model;
    const std::vector<Edge> edges = top_edges(model.adjacency.value, o->k);
    write_text(o->json_path, topology_json(edges, o->k, model.config().landmarks).dump(2) + "\n");
    if (!o->svg_path.empty()) {
      write_text(o->svg_path, topology_svg(edges, model.mean_shape(), static_cast<double>(model.config().image_width),
                                           static_cast<double>(model.config().image_height)));
    }
    std::cout << edges.size() << " edges -> " << o->json_path << "\n";
  });
}

void plot_ced_cmd(CLI::App& app) {
  struct Opts {
    std::vector<std::string> inputs;
    std::string out;
    double max_error = 0.1;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("plot-ced", "Plot one or more CED CSV files as an SVG step chart");
  cmd->add_option("inputs", o->inputs, "CED CSV files, optionally as label=path")->required();
  cmd->add_option("--out", o->out, "SVG output")->required();
  cmd->add_option("--max-error", o->max_error, "right end of the NME axis")->capture_default_str();
  cmd->callback([o] {
    banner("plot-ced", nullptr, {{"inputs", o->inputs}, {"out", o->out}, {"max_error", o->max_error}});
    if (!(o->max_error > 0.0)) throw ConfigError("--max-error must be positive");
    std::vector<std::pair<std::string, CedCurve>> curves;
    for (const std::string& input : o->inputs) {
      const auto eq = input.find('=');
      const std::string label = eq == std::string::npos ? fs::path(input).stem().string() : input.substr(0, eq);
      const std::string path = eq == std::string::npos ? input : input.substr(eq + 1);
      curves.emplace_back(label, read_ced_csv(path));
    }
    write_text(o->out, ced_svg(curves, o->max_error));
  });
}

void ablate_cmd(CLI::App& app) {
  struct Opts {
    ConfigFlags flags;
    std::vector<std::string> grids;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("ablate", "Train and evaluate every cell of an ablation grid for several seeds");
  o->flags.add_config_file(*cmd);
  o->flags.add_model_flags(*cmd);
  o->flags.add_train_flags(*cmd);
  o->flags.add_path_flags(*cmd, true, true);
  cmd->add_option("--grid", o->grids, "grid(s) to run: connectivity, steps, transform")
      ->required()
      ->check(CLI::IsMember({"connectivity", "steps", "transform"}));
  cmd->add_option("--seeds", o->seeds, "seeds; each drives init, shuffling and augmentation")->capture_default_str()->delimiter(',');
  cmd->add_option("--out", o->out, "CSV output (default: <out-dir>/ablation_<grid>.csv)");
  cmd->callback([o] {
    RunConfig config = o->flags.resolve();
    const Dataset train_set = load_split(config, "train");
    const Dataset val_set = load_split(config, "val");
    const Dataset test_set = load_split(config, "test");
    adopt_dataset(config, train_set);
    banner("ablate", &config, {{"grids", o->grids}, {"seeds", o->seeds}, {"out", o->out}});
    if (!o->out.empty() && o->grids.size() > 1) throw ConfigError("--out needs a single --grid");
    for (const std::string& name : o->grids) {
      const AblationGrid grid = parse_ablation_grid(name);
      const std::vector<AblationRow> rows =
          run_ablation(grid, config, {train_set.records, val_set.records, test_set.records}, o->seeds, [](const AblationRow& r) {
            std::cerr << r.grid << " " << r.cell << " seed " << r.seed << ": "
                      << (r.failed ? "failed (" + r.error + ")" : "test_nme " + std::to_string(r.test_nme)) << "\n";
          });
      const fs::path path = o->out.empty() ? fs::path(config.paths.out_dir) / ("ablation_" + name + ".csv") : fs::path(o->out);
      const std::string csv = ablation_csv(rows);
      write_text(path, csv);
      std::cout << csv;
    }
  });
}

}  // namespace

void register_commands(CLI::App& app) {
  gen_data(app);
  train_cmd(app);
  eval_cmd(app);
  predict_cmd(app);
  export_graph_cmd(app);
  plot_ced_cmd(app);
  ablate_cmd(app);
}

}  // namespace dag::cli
