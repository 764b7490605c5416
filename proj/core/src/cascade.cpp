#include "dag/cascade.hpp"

#include <cmath>
#include <random>

#include "dag/errors.hpp"
#include "dag/ops.hpp"
#include "dag/signal.hpp"

namespace dag {

DagModel::DagModel(ModelConfig config, LandmarkSet mean_shape)
    : config_(std::move(config)), mean_shape_(std::move(mean_shape)) {
  const ModelConfig& c = config_;
  require(c.landmarks >= 2, "DagModel: need at least 2 landmarks");
  if (mean_shape_.size() != c.landmarks) throw ContractViolation("DagModel: mean shape has " + std::to_string(mean_shape_.size()) +
                                                 " landmarks, config says " + std::to_string(c.landmarks));
  require(c.gcn_blocks >= 1, "DagModel: need at least one GCN block");
  require(c.lambda_global >= 0.0 && c.lambda_local >= 0.0, "DagModel: loss weights must be non-negative");
  require(c.margin >= 0.0, "DagModel: margin must be non-negative");

  std::mt19937_64 rng(c.init_seed);
  backbone = init_backbone(c.feature_channels, rng());

  adjacency = init_adjacency(c.landmarks);
  if (c.connectivity == ConnectivityMode::self) {
    Tensor mask(adjacency.value.shape());
    for (std::size_t i = 0; i < c.landmarks; ++i)
      for (std::size_t j = 0; j < c.landmarks; ++j) {
        if (i == j) mask(i, j) = 1.0;
        else adjacency.value(i, j) = 0.0;
      }
    adjacency.train_mask = std::move(mask);
  } else if (c.connectivity == ConnectivityMode::uniform) {
    adjacency.trainable = false;
  }

  const std::size_t signal = c.signal_width();
  global_gcn = make_gcn_stack("global", signal, c.hidden_width, c.gcn_blocks, rng);
  head = make_readout_head("global.head", (c.gcn_blocks + 1) * c.hidden_width, c.head_hidden, c.transform,
                           static_cast<double>(c.image_width), static_cast<double>(c.image_height), rng);
  local_gcn = make_gcn_stack("local", signal, c.hidden_width, c.gcn_blocks, rng);
  offset = make_affine("local.offset", c.hidden_width, 2, 0.0, rng);
}

std::vector<Parameter*> DagModel::parameters() {
  std::vector<Parameter*> out = backbone.parameters();
  out.push_back(&adjacency);
  for (Parameter* p : global_gcn.parameters()) out.push_back(p);
  for (Parameter* p : head.parameters()) out.push_back(p);
  for (Parameter* p : local_gcn.parameters()) out.push_back(p);
  out.push_back(&offset.weight);
  out.push_back(&offset.bias);
  return out;
}

void DagModel::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

LandmarkSet compute_mean_shape(std::span<const LandmarkSet> shapes, double image_width, double image_height) {
  require(!shapes.empty(), "compute_mean_shape: empty training list");
  const std::size_t n = shapes.front().size();
  require(n > 0, "compute_mean_shape: shapes have no landmarks");
  LandmarkSet mean;
  mean.points.assign(n, Point2{});
  for (const LandmarkSet& s : shapes) {
    require(s.size() == n, "compute_mean_shape: landmark counts disagree");
    for (std::size_t i = 0; i < n; ++i) {
      mean[i].x += s[i].x;
      mean[i].y += s[i].y;
    }
  }
  const double count = static_cast<double>(shapes.size());
  double cx = 0.0, cy = 0.0;
  for (Point2& p : mean.points) {
    p.x /= count;
    p.y /= count;
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(n);
  cy /= static_cast<double>(n);
  for (Point2& p : mean.points) {
    p.x += image_width / 2.0 - cx;
    p.y += image_height / 2.0 - cy;
  }
  return mean;
}

namespace {

Var signal_at(const FeatureMap& features, Var landmarks, const ModelConfig& c) {
  return build_graph_signal(features, landmarks, static_cast<double>(c.image_width), c.shape_features);
}

}  // namespace

GlobalStageOutput global_stage(Tape& tape, const FeatureMap& features, DagModel& model) {
  const ModelConfig& c = model.config();
  Var v0 = tape.constant(to_tensor(model.mean_shape()));
  Var adjacency = tape.parameter(model.adjacency);
  std::vector<Var> layers = gcn_stack(tape, signal_at(features, v0, c), adjacency, model.global_gcn);
  Var theta = gin_readout(tape, layers, model.head);
  Var transform = c.transform == TransformKind::perspective ? theta : affine_to_homogeneous(theta);
  return GlobalStageOutput{apply_perspective(transform, v0), transform};
}

Var local_step(Tape& tape, const FeatureMap& features, Var landmarks, DagModel& model) {
  const ModelConfig& c = model.config();
  Var adjacency = tape.parameter(model.adjacency);
  std::vector<Var> layers = gcn_stack(tape, signal_at(features, landmarks, c), adjacency, model.local_gcn);
  // Offsets are regressed in units of image width.
  Var delta = scale(affine(tape, layers.back(), model.offset), static_cast<double>(c.image_width));
  return add(landmarks, delta);
}

CascadeForward forward_cascade(Tape& tape, const Image& image, DagModel& model) {
  const ModelConfig& c = model.config();
  if (!(image.width == c.image_width && image.height == c.image_height)) throw ContractViolation("forward_cascade: image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
              ", model expects " + std::to_string(c.image_width) + "x" + std::to_string(c.image_height));
  CascadeForward out;
  out.features = extract_features(tape, image, model.backbone);
  GlobalStageOutput global = global_stage(tape, out.features, model);
  out.stages.push_back(tape.constant(to_tensor(model.mean_shape())));
  out.stages.push_back(global.landmarks);
  out.transform = global.transform;
  for (std::size_t t = 0; t < c.local_steps; ++t) {
    out.stages.push_back(local_step(tape, out.features, out.stages.back(), model));
  }
  return out;
}

CascadeTrace run_cascade(const Image& image, DagModel& model) {
  Tape tape(false);
  CascadeForward forward = forward_cascade(tape, image, model);
  CascadeTrace trace;
  for (const Var& v : forward.stages) trace.stages.push_back(landmarks_from_tensor(v.value()));
  trace.transform = vector_to_perspective(forward.transform.value().values());
  return trace;
}

namespace {

Var mean_l1(Var predicted, const LandmarkSet& truth, const char* op) {
  const Tensor& p = predicted.value();
  if (!(p.rank() == 2 && p.cols() == 2)) throw ContractViolation(std::string(op) + ": predictions must be [N x 2]");
  if (p.rows() != truth.size()) throw ContractViolation(std::string(op) + ": " + std::to_string(p.rows()) + " predictions vs " +
                                        std::to_string(truth.size()) + " ground-truth landmarks");
  Var gt = predicted.tape().constant(to_tensor(truth));
  return scale(sum_all(abs(sub(predicted, gt))), 1.0 / static_cast<double>(truth.size()));
}

}  // namespace

Var loss_global(Var aligned, const LandmarkSet& truth, double margin_pixels) {
  require(margin_pixels >= 0.0, "loss_global: margin must be non-negative");
  return relu(add_scalar(mean_l1(aligned, truth, "loss_global"), -margin_pixels));
}

Var loss_local(Var final_landmarks, const LandmarkSet& truth) { return mean_l1(final_landmarks, truth, "loss_local"); }

Var loss_total(Var global, Var local, double lambda_global, double lambda_local) {
  require(lambda_global >= 0.0 && lambda_local >= 0.0, "loss_total: weights must be non-negative");
  return add(scale(global, lambda_global), scale(local, lambda_local));
}

LossTerms cascade_loss(const CascadeForward& forward, const LandmarkSet& truth, const ModelConfig& config) {
  require(forward.stages.size() >= 2, "cascade_loss: incomplete forward pass");
  LossTerms terms;
  terms.global = loss_global(forward.stages[1], truth, config.margin_pixels());
  if (config.intermediate_supervision && forward.stages.size() > 3) {
    Var acc = loss_local(forward.stages[2], truth);
    for (std::size_t s = 3; s < forward.stages.size(); ++s) acc = add(acc, loss_local(forward.stages[s], truth));
    terms.local = scale(acc, 1.0 / static_cast<double>(forward.stages.size() - 2));
  } else {
    terms.local = loss_local(forward.stages.back(), truth);
  }
  terms.total = loss_total(terms.global, terms.local, config.lambda_global, config.lambda_local);
  return terms;
}

}  // namespace dag
