#include "overrides.hpp"

namespace dag::cli {

template <class Get>
void ConfigFlags::add(CLI::App& app, const std::string& name, Get get, const std::string& help) {
  auto& slot = get(flags_);
  CLI::Option* opt = app.add_option(name, slot, help)->capture_default_str();
  apply_.emplace_back(opt, [this, get](RunConfig& target) { get(target) = get(flags_); });
}

void ConfigFlags::add_choice(CLI::App& app, const std::string& name, std::string& slot, std::vector<std::string> choices,
                             std::function<void(RunConfig&, const std::string&)> apply, const std::string& help) {
  CLI::Option* opt = app.add_option(name, slot, help)->capture_default_str()->check(CLI::IsMember(std::move(choices)));
  apply_.emplace_back(opt, [&slot, apply](RunConfig& target) { apply(target, slot); });
}

void ConfigFlags::add_config_file(CLI::App& app) {
  app.add_option("--config", config_path_, "JSON config file; explicit flags override it")->check(CLI::ExistingFile);
}

void ConfigFlags::add_data_flags(CLI::App& app) {
  add(app, "--seed", [](RunConfig& c) -> auto& { return c.data.seed; }, "dataset seed");
  add(app, "--train", [](RunConfig& c) -> auto& { return c.data.train; }, "training samples");
  add(app, "--val", [](RunConfig& c) -> auto& { return c.data.val; }, "validation samples");
  add(app, "--test", [](RunConfig& c) -> auto& { return c.data.test; }, "test samples");
  add(app, "--occlusion-rate", [](RunConfig& c) -> auto& { return c.data.generator.occlusion_rate; },
      "probability that a sample gets an occluding rectangle");
  add(app, "--max-projective", [](RunConfig& c) -> auto& { return c.data.generator.max_projective; },
      "bound on the projective jitter entries");
  add(app, "--max-rotation", [](RunConfig& c) -> auto& { return c.data.generator.max_rotation_deg; },
      "rotation jitter bound in degrees");
  CLI::Option* size = app.add_option("--image-size", image_size_, "square image side in pixels")->capture_default_str();
  apply_.emplace_back(size, [this](RunConfig& c) {
    c.data.generator.width = c.data.generator.height = image_size_;
    c.model.image_width = c.model.image_height = image_size_;
  });
}

void ConfigFlags::add_model_flags(CLI::App& app) {
  add_choice(app, "--connectivity", connectivity_, {"self", "uniform", "learned"},
             [](RunConfig& c, const std::string& v) { c.model.connectivity = parse_connectivity(v); }, "adjacency mode");
  add_choice(app, "--transform", transform_, {"perspective", "affine"},
             [](RunConfig& c, const std::string& v) { c.model.transform = parse_transform_kind(v); }, "global stage transform");
  add(app, "--shape-features", [](RunConfig& c) -> auto& { return c.model.shape_features; },
      "append displacement vectors to the graph signal");
  add(app, "--steps", [](RunConfig& c) -> auto& { return c.model.local_steps; }, "local refinement steps");
  add(app, "--blocks", [](RunConfig& c) -> auto& { return c.model.gcn_blocks; }, "residual GCN blocks per stage");
  add(app, "--hidden", [](RunConfig& c) -> auto& { return c.model.hidden_width; }, "GCN hidden width");
  add(app, "--channels", [](RunConfig& c) -> auto& { return c.model.feature_channels; }, "backbone output channels");
  add(app, "--margin", [](RunConfig& c) -> auto& { return c.model.margin; }, "global hinge margin, fraction of image width");
  add(app, "--lambda-global", [](RunConfig& c) -> auto& { return c.model.lambda_global; }, "global loss weight");
  add(app, "--lambda-local", [](RunConfig& c) -> auto& { return c.model.lambda_local; }, "local loss weight");
  add(app, "--init-seed", [](RunConfig& c) -> auto& { return c.model.init_seed; }, "parameter init seed");
}

void ConfigFlags::add_train_flags(CLI::App& app) {
  add(app, "--epochs", [](RunConfig& c) -> auto& { return c.train.epochs; }, "training epochs");
  add(app, "--batch-size", [](RunConfig& c) -> auto& { return c.train.batch_size; }, "samples per batch");
  add(app, "--lr", [](RunConfig& c) -> auto& { return c.train.base_lr; }, "base learning rate");
  add(app, "--decay-every", [](RunConfig& c) -> auto& { return c.train.decay_every; }, "epochs between lr decays");
  add(app, "--decay-factor", [](RunConfig& c) -> auto& { return c.train.decay_factor; }, "lr decay factor");
  add(app, "--weight-decay", [](RunConfig& c) -> auto& { return c.train.adam.weight_decay; }, "L2 penalty");
  add(app, "--augment", [](RunConfig& c) -> auto& { return c.train.augment; }, "random flip/rotate/scale");
  add(app, "--shuffle-seed", [](RunConfig& c) -> auto& { return c.train.shuffle_seed; }, "batch order seed");
  add(app, "--augment-seed", [](RunConfig& c) -> auto& { return c.train.augment_seed; }, "augmentation seed");
}

void ConfigFlags::add_path_flags(CLI::App& app, bool data, bool out) {
  if (data) add(app, "--data-dir", [](RunConfig& c) -> auto& { return c.paths.data_dir; }, "dataset directory");
  if (out) add(app, "--out-dir", [](RunConfig& c) -> auto& { return c.paths.out_dir; }, "output directory");
}

RunConfig ConfigFlags::resolve() const {
  RunConfig config = config_path_.empty() ? RunConfig{} : load_run_config(config_path_);
  for (const auto& [opt, apply] : apply_) {
    if (opt->count() > 0) apply(config);
  }
  config.validate();
  return config;
}

}  // namespace dag::cli
