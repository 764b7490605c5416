#include "dag/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "dag/errors.hpp"
#include "dag/ops.hpp"

namespace dag {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t augment_seed_for(std::uint64_t base, std::size_t epoch, std::size_t index) {
  return mix(mix(mix(base) ^ epoch) ^ index);
}

std::vector<Tensor> snapshot(std::span<Parameter* const> params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

}  // namespace

OptimizerState make_optimizer(std::span<Parameter* const> params, AdamConfig config) {
  OptimizerState state;
  state.config = config;
  for (const Parameter* p : params) {
    state.first_moment.emplace_back(p->value.shape());
    state.second_moment.emplace_back(p->value.shape());
  }
  return state;
}

void adam_step(std::span<Parameter* const> params, OptimizerState& state, double lr) {
  require(state.first_moment.size() == params.size() && state.second_moment.size() == params.size(),
          "adam_step: optimizer state does not match the parameter list");
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    if (!p.trainable) continue;
    if (p.grad.shape() != p.value.shape()) throw ContractViolation("adam_step: parameter " + p.name + " has no gradient");
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    if (m.shape() != p.value.shape() || v.shape() != p.value.shape())
      throw ContractViolation("adam_step: moment shape mismatch for " + p.name);
    const Tensor* mask = p.train_mask ? &*p.train_mask : nullptr;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      if (mask && (*mask)[i] == 0.0) continue;
      const double g = p.grad[i] + c.weight_decay * p.value[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double mhat = m[i] / correct1;
      const double vhat = v[i] / correct2;
      p.value[i] -= lr * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

double lr_at(std::size_t epoch, double base_lr, std::size_t decay_every, double factor) {
  require(decay_every > 0, "lr_at: decay interval must be positive");
  return base_lr * std::pow(factor, static_cast<double>(epoch / decay_every));
}

std::vector<EvalRecord> predict_records(DagModel& model, std::span<const SampleRecord> samples) {
  const auto [a, b] = landmark_template().norm_pair;
  std::vector<EvalRecord> out;
  out.reserve(samples.size());
  for (const SampleRecord& s : samples) {
    CascadeTrace trace = run_cascade(s.image, model);
    EvalRecord rec;
    rec.predicted = std::move(trace.stages.back());
    rec.truth = s.landmarks;
    rec.norm_distance = pair_distance(s.landmarks, a, b);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<EvalRecord> mean_shape_records(const LandmarkSet& mean_shape, std::span<const SampleRecord> samples) {
  const auto [a, b] = landmark_template().norm_pair;
  std::vector<EvalRecord> out;
  for (const SampleRecord& s : samples) out.push_back(EvalRecord{mean_shape, s.landmarks, pair_distance(s.landmarks, a, b), {}});
  return out;
}

double mean_nme(std::span<const EvalRecord> records) {
  require(!records.empty(), "mean_nme: no records");
  double total = 0.0;
  for (const EvalRecord& r : records) total += nme(r);
  return total / static_cast<double>(records.size());
}

double dataset_loss(DagModel& model, std::span<const SampleRecord> samples) {
  require(!samples.empty(), "dataset_loss: no samples");
  double total = 0.0;
  for (const SampleRecord& s : samples) {
    Tape tape(false);
    CascadeForward forward = forward_cascade(tape, s.image, model);
    total += cascade_loss(forward, s.landmarks, model.config()).total.value()[0];
  }
  return total / static_cast<double>(samples.size());
}

TrainResult train(DagModel& model, std::span<const SampleRecord> train_set, std::span<const SampleRecord> val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  require(!train_set.empty(), "train: empty training set");
  require(!val_set.empty(), "train: empty validation set");
  require(config.batch_size > 0, "train: batch size must be positive");
  const std::vector<Parameter*> params = model.parameters();
  TrainResult result;
  OptimizerState state = make_optimizer(params, config.adam);
  result.best_values = snapshot(params);
  result.best_state = state;
  result.best_val_nme = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(config.shuffle_seed);
  const std::size_t batches = (train_set.size() + config.batch_size - 1) / config.batch_size;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_at(epoch, config.base_lr, config.decay_every, config.decay_factor);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t used = 0, skipped = 0;
    std::string last_failure;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(begin + config.batch_size, train_set.size());
      const double weight = 1.0 / static_cast<double>(end - begin);
      model.zero_grad();
      double batch_loss = 0.0;
      bool ok = true;
      for (std::size_t k = begin; k < end && ok; ++k) {
        const std::size_t idx = order[k];
        SampleRecord augmented;
        const SampleRecord* sample = &train_set[idx];
        if (config.augment) {
          augmented = augment(*sample, augment_seed_for(config.augment_seed, epoch, idx), config.augment_ranges);
          sample = &augmented;
        }
        try {
          Tape tape;
          CascadeForward forward = forward_cascade(tape, sample->image, model);
          LossTerms terms = cascade_loss(forward, sample->landmarks, model.config());
          const double value = terms.total.value()[0];
          if (!std::isfinite(value)) {
            ok = false;
            last_failure = "non-finite loss on sample " + std::to_string(idx);
            break;
          }
          tape.backward(scale(terms.total, weight));
          batch_loss += weight * value;
        } catch (const DegenerateTransform& e) {
          ok = false;
          last_failure = "sample " + std::to_string(idx) + ": " + e.what();
        }
      }
      if (!ok) {
        ++skipped;
        continue;
      }
      adam_step(params, state, lr);
      loss_sum += batch_loss;
      ++used;
    }
    if (static_cast<double>(skipped) > config.max_skip_fraction * static_cast<double>(batches))
      throw TrainingAborted("train: epoch " + std::to_string(epoch) + " skipped " + std::to_string(skipped) + " of " +
                            std::to_string(batches) + " batches; last failure: " + last_failure);

    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr;
    entry.train_loss = used ? loss_sum / static_cast<double>(used) : std::numeric_limits<double>::quiet_NaN();
    entry.skipped_batches = skipped;
    const std::vector<EvalRecord> val = predict_records(model, val_set);
    entry.val_nme = mean_nme(val);
    if (config.track_clean_loss) entry.clean_train_loss = dataset_loss(model, train_set);
    if (entry.val_nme < result.best_val_nme) {
      result.best_val_nme = entry.val_nme;
      result.best_epoch = epoch;
      result.best_values = snapshot(params);
      result.best_state = state;
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  result.final_state = state;
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = result.best_values[k];
  return result;
}

std::string format_log_csv(std::span<const EpochLog> log) {
  std::string out = "epoch,lr,train_loss,val_nme\n";
  char buf[160];
  for (const EpochLog& e : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", e.epoch, e.lr, e.train_loss, e.val_nme);
    out += buf;
  }
  return out;
}

}  // namespace dag
