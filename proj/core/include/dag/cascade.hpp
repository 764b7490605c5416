#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dag/autodiff.hpp"
#include "dag/backbone.hpp"
#include "dag/graph.hpp"
#include "dag/image.hpp"
#include "dag/landmarks.hpp"
#include "dag/transform.hpp"

namespace dag {

enum class ConnectivityMode {
  self,     // off-diagonals fixed at zero, diagonal trainable
  uniform,  // frozen at 1/N
  learned,  // every entry trainable
};

struct ModelConfig {
  std::size_t landmarks = 16;
  std::size_t image_width = 128;
  std::size_t image_height = 128;
  std::size_t feature_channels = 64;
  std::size_t hidden_width = 128;
  std::size_t head_hidden = 128;
  std::size_t gcn_blocks = 4;
  std::size_t local_steps = 3;
  TransformKind transform = TransformKind::perspective;
  ConnectivityMode connectivity = ConnectivityMode::learned;
  bool shape_features = true;
  /// Global-stage margin as a fraction of image width.
  double margin = 0.15;
  double lambda_global = 1.0;
  double lambda_local = 1.0;
  /// Supervise every local step instead of only the last one.
  bool intermediate_supervision = false;
  std::uint64_t init_seed = 1;

  std::size_t signal_width() const {
    return feature_channels + (shape_features ? 2 * (landmarks - 1) : 0);
  }
  double margin_pixels() const { return margin * static_cast<double>(image_width); }
};

/// Backbone, one shared adjacency, and the two GCN stages. GCN-global and
/// GCN-local have separate weights but read the same adjacency parameter.
class DagModel {
 public:
  DagModel(ModelConfig config, LandmarkSet mean_shape);

  const ModelConfig& config() const noexcept { return config_; }
  const LandmarkSet& mean_shape() const noexcept { return mean_shape_; }
  /// Every parameter in a fixed order; names are unique.
  std::vector<Parameter*> parameters();
  void zero_grad();

  BackboneParams backbone;
  Parameter adjacency;
  GcnStackParams global_gcn;
  ReadoutHeadParams head;
  GcnStackParams local_gcn;
  AffineParams offset;

 private:
  ModelConfig config_;
  LandmarkSet mean_shape_;
};

/// Per-landmark mean, translated so the centroid sits at the image center.
LandmarkSet compute_mean_shape(std::span<const LandmarkSet> shapes, double image_width, double image_height);

struct GlobalStageOutput {
  Var landmarks;  // V1, [N x 2]
  Var transform;  // [1 x 9], pixel coordinates
};

GlobalStageOutput global_stage(Tape& tape, const FeatureMap& features, DagModel& model);

/// v + offset, with the offset regressed from the signal rebuilt at v.
Var local_step(Tape& tape, const FeatureMap& features, Var landmarks, DagModel& model);

struct CascadeForward {
  FeatureMap features;
  std::vector<Var> stages;  // V0, V1, ..., V(T+1)
  Var transform;
};

CascadeForward forward_cascade(Tape& tape, const Image& image, DagModel& model);

struct CascadeTrace {
  std::vector<LandmarkSet> stages;
  PerspectiveTransform transform;
};

/// Evaluation-only forward pass.
CascadeTrace run_cascade(const Image& image, DagModel& model);

/// [mean_i (|dx_i| + |dy_i|) - margin]_+ ; zero subgradient at the hinge.
Var loss_global(Var aligned, const LandmarkSet& truth, double margin_pixels);
/// mean_i (|dx_i| + |dy_i|)
Var loss_local(Var final_landmarks, const LandmarkSet& truth);
Var loss_total(Var global, Var local, double lambda_global, double lambda_local);

struct LossTerms {
  Var global;
  Var local;
  Var total;
};

LossTerms cascade_loss(const CascadeForward& forward, const LandmarkSet& truth, const ModelConfig& config);

}  // namespace dag
