#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dag/autodiff.hpp"
#include "dag/cascade.hpp"
#include "dag/metrics.hpp"
#include "dag/synth.hpp"

namespace dag {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Coupled L2 penalty: g <- g + weight_decay * theta before the update.
  double weight_decay = 1e-4;
};

/// First/second moments per parameter, in the order of the parameter list.
struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

OptimizerState make_optimizer(std::span<Parameter* const> params, AdamConfig config = {});

/// One bias-corrected Adam update of every trainable parameter. Entries with a
/// zero train mask are left untouched.
void adam_step(std::span<Parameter* const> params, OptimizerState& state, double lr);

/// base_lr * factor^floor(epoch / decay_every)
double lr_at(std::size_t epoch, double base_lr, std::size_t decay_every = 100, double factor = 0.1);

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 8;
  double base_lr = 1e-4;
  std::size_t decay_every = 100;
  double decay_factor = 0.1;
  AdamConfig adam;
  bool augment = true;
  AugmentRanges augment_ranges;
  std::uint64_t shuffle_seed = 1;
  std::uint64_t augment_seed = 1;
  /// Fraction of skipped batches in one epoch above which training aborts.
  double max_skip_fraction = 0.05;
  /// Also record the un-augmented training loss at every epoch end.
  bool track_clean_loss = false;
};

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_nme = 0.0;
  std::size_t skipped_batches = 0;
  double clean_train_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  /// Parameter values and optimizer state at the best validation NME. When no
  /// epoch ran they hold the initial model.
  std::vector<Tensor> best_values;
  OptimizerState best_state;
  std::size_t best_epoch = 0;
  double best_val_nme = 0.0;
  OptimizerState final_state;
};

/// Called after every epoch; used for progress output.
using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains `model` in place and finishes with the best-validation weights loaded.
TrainResult train(DagModel& model, std::span<const SampleRecord> train_set, std::span<const SampleRecord> val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Mean over `samples` of the total cascade loss, without augmentation.
double dataset_loss(DagModel& model, std::span<const SampleRecord> samples);

/// Runs the cascade on every sample and pairs the final stage with the truth.
/// The normalizer is the ground-truth distance of the template's reference pair.
std::vector<EvalRecord> predict_records(DagModel& model, std::span<const SampleRecord> samples);
double mean_nme(std::span<const EvalRecord> records);

/// Records that predict the model's starting shape for every sample.
std::vector<EvalRecord> mean_shape_records(const LandmarkSet& mean_shape, std::span<const SampleRecord> samples);

std::string format_log_csv(std::span<const EpochLog> log);

}  // namespace dag
