#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dag/tensor.hpp"

namespace dag {

/// A named trainable tensor. Gradients from every tape that references the
/// parameter accumulate into `grad` until `zero_grad` is called.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;
  /// Optional per-entry mask; entries with mask 0 never receive gradient.
  std::optional<Tensor> train_mask;

  Parameter() = default;
  Parameter(std::string name, Tensor value, bool trainable = true);

  void zero_grad();
};

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Dynamic reverse-mode recording. Parameter values are borrowed, so they must
/// not be modified while a tape that references them is alive. Nodes are appended in execution order, so
/// replaying them backwards visits every node after all of its consumers.
class Tape {
 public:
  /// Receives the gradient of the node's output; accumulates into inputs via
  /// `Tape::grad`.
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  /// With `track_gradients` false every parameter enters as a constant and no
  /// backward closures are kept.
  explicit Tape(bool track_gradients = true) : track_gradients_(track_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Registers `p` as a leaf. Repeated calls with the same parameter return the
  /// same node, so shared weights stay shared.
  Var parameter(Parameter& p);
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);
  /// Attaches the backward of a node after recording, for closures that need
  /// the node's own output. Ignored when the node needs no gradient.
  void set_backward(Var v, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_[v.id_].current(); }
  bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }
  /// Mutable gradient buffer of `v`, zero-allocated on first use.
  Tensor& grad(Var v);
  /// Adds `g` into the gradient of `v`, taking ownership when none exists yet.
  void accumulate(Var v, Tensor&& g);
  /// Gradient after `backward`; empty tensor if nothing flowed into `v`.
  const Tensor& grad_of(Var v) const { return nodes_[v.id_].grad; }

  /// Seeds d(loss)/d(loss) = 1, replays the tape backwards and accumulates leaf
  /// gradients into their Parameters.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
    /// Parameter leaves read the parameter's storage instead of a copy.
    const Tensor* borrowed = nullptr;

    const Tensor& current() const { return borrowed ? *borrowed : value; }
  };

  Var push(Node node);

  bool track_gradients_ = true;
  std::deque<Node> nodes_;
  std::vector<std::pair<const Parameter*, std::size_t>> param_nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }

}  // namespace dag
