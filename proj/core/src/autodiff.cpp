#include "dag/autodiff.hpp"

#include "dag/errors.hpp"

namespace dag {

Parameter::Parameter(std::string name_, Tensor value_, bool trainable_)
    : name(std::move(name_)), value(std::move(value_)), grad(value.shape()), trainable(trainable_) {}

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  else grad.fill(0.0);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

Var Tape::parameter(Parameter& p) {
  for (const auto& [param, id] : param_nodes_) {
    if (param == &p) return Var(this, id);
  }
  Node node;
  node.borrowed = &p.value;
  const bool tracked = p.trainable && track_gradients_;
  node.requires_grad = tracked;
  node.param = tracked ? &p : nullptr;
  Var v = push(std::move(node));
  param_nodes_.emplace_back(&p, v.id_);
  return v;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    require(in.tape_ == this, "tape: input recorded on a different tape");
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    require(in.tape_ == this, "tape: input recorded on a different tape");
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

void Tape::set_backward(Var v, BackwardFn backward) {
  Node& node = nodes_[v.id_];
  if (node.requires_grad) node.backward = std::move(backward);
}

Tensor& Tape::grad(Var v) {
  Node& node = nodes_[v.id_];
  const Tensor& value = node.current();
  if (node.grad.size() != value.size()) node.grad = Tensor(value.shape());
  return node.grad;
}

void Tape::accumulate(Var v, Tensor&& g) {
  Node& node = nodes_[v.id_];
  const Tensor& value = node.current();
  if (g.size() != value.size()) throw ContractViolation("tape: gradient of shape " + shape_string(g.shape()) + " for value " + shape_string(value.shape()));
  if (node.grad.size() != value.size()) {
    node.grad = std::move(g);
    node.grad.reshape(value.shape());
  } else {
    node.grad += g;
  }
}

void Tape::backward(Var loss) {
  require(loss.tape_ == this, "backward: loss belongs to a different tape");
  if (value(loss).size() != 1) throw ContractViolation("backward: loss must be scalar, got shape " + shape_string(value(loss).shape()));
  grad(loss).fill(1.0);
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.size() != node.current().size()) continue;
    if (node.backward) {
      node.backward(*this, node.grad);
    } else if (node.param != nullptr) {
      Parameter& p = *node.param;
      if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
      if (p.train_mask) {
        const Tensor& mask = *p.train_mask;
        for (std::size_t k = 0; k < p.grad.size(); ++k) p.grad[k] += node.grad[k] * mask[k];
      } else {
        p.grad += node.grad;
      }
    }
  }
}

}  // namespace dag
