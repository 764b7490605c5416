#include "dag/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dag/errors.hpp"
#include "dag/ops.hpp"

namespace dag {

AffineParams make_affine(const std::string& name, std::size_t in, std::size_t out, double stddev,
                         std::mt19937_64& rng) {
  Tensor weight(Shape{in, out});
  if (stddev > 0.0) {
    std::normal_distribution<double> normal(0.0, stddev);
    for (double& v : weight.values()) v = normal(rng);
  }
  return AffineParams{Parameter(name + ".weight", std::move(weight)), Parameter(name + ".bias", Tensor(Shape{out}))};
}

Var affine(Tape& tape, Var x, AffineParams& params) {
  return add_bias(matmul(x, tape.parameter(params.weight)), tape.parameter(params.bias));
}

GcnBlockParams make_gcn_block(const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng) {
  // Two summed paths, so each gets half the fan-in variance budget.
  std::normal_distribution<double> normal(0.0, std::sqrt(1.0 / (2.0 * static_cast<double>(in))));
  Tensor w1(Shape{in, out}), w2(Shape{in, out});
  for (double& v : w1.values()) v = normal(rng);
  for (double& v : w2.values()) v = normal(rng);
  return GcnBlockParams{Parameter(name + ".w1", std::move(w1)), Parameter(name + ".w2", std::move(w2)),
                        Parameter(name + ".bias", Tensor(Shape{out}))};
}

std::vector<Parameter*> GcnStackParams::parameters() {
  std::vector<Parameter*> out{&input_proj.weight, &input_proj.bias};
  for (GcnBlockParams& b : blocks) {
    out.push_back(&b.self_weight);
    out.push_back(&b.neighbor_weight);
    out.push_back(&b.bias);
  }
  return out;
}

GcnStackParams make_gcn_stack(const std::string& name, std::size_t signal_width, std::size_t hidden,
                              std::size_t block_count, std::mt19937_64& rng) {
  GcnStackParams stack;
  stack.input_proj =
      make_affine(name + ".input_proj", signal_width, hidden, std::sqrt(2.0 / static_cast<double>(signal_width)), rng);
  for (std::size_t k = 0; k < block_count; ++k) {
    stack.blocks.push_back(make_gcn_block(name + ".block" + std::to_string(k), hidden, hidden, rng));
  }
  return stack;
}

Var graph_conv(Tape& tape, Var features, Var adjacency, GcnBlockParams& params) {
  const Tensor& f = features.value();
  const Tensor& e = adjacency.value();
  require(f.rank() == 2, "graph_conv: features must be [N x C]");
  require(e.rank() == 2 && e.rows() == e.cols(), "graph_conv: adjacency must be square");
  if (e.rows() != f.rows()) throw ContractViolation("graph_conv: adjacency is " + shape_string(e.shape()) + " but there are " +
                                    std::to_string(f.rows()) + " nodes");
  require(params.self_weight.value.shape() == params.neighbor_weight.value.shape(),
          "graph_conv: W1 and W2 must share a shape");
  Var self_term = matmul(features, tape.parameter(params.self_weight));
  Var neighbor_term = matmul(adjacency, matmul(features, tape.parameter(params.neighbor_weight)));
  return add_bias(add(self_term, neighbor_term), tape.parameter(params.bias));
}

Var residual_gcn_block(Tape& tape, Var features, Var adjacency, GcnBlockParams& params) {
  const Shape& w = params.self_weight.value.shape();
  require(w.size() == 2 && w[0] == w[1], "residual_gcn_block: block must preserve width");
  require(features.value().cols() == w[0], "residual_gcn_block: feature width does not match block");
  return add(features, relu(graph_conv(tape, features, adjacency, params)));
}

std::vector<Var> gcn_stack(Tape& tape, Var signal, Var adjacency, GcnStackParams& params) {
  require(!params.blocks.empty(), "gcn_stack: empty block list");
  if (signal.value().cols() != params.input_proj.in_width()) throw ContractViolation("gcn_stack: signal width " + std::to_string(signal.value().cols()) + " but projection expects " +
              std::to_string(params.input_proj.in_width()));
  std::vector<Var> layers;
  layers.reserve(params.blocks.size() + 1);
  layers.push_back(relu(affine(tape, signal, params.input_proj)));
  for (GcnBlockParams& block : params.blocks) {
    layers.push_back(residual_gcn_block(tape, layers.back(), adjacency, block));
  }
  return layers;
}

Parameter init_adjacency(std::size_t landmark_count) {
  require(landmark_count >= 2, "init_adjacency: need at least 2 landmarks");
  const double w = 1.0 / static_cast<double>(landmark_count);
  return Parameter("adjacency", Tensor(Shape{landmark_count, landmark_count}, w));
}

std::vector<Edge> top_edges(const Tensor& adjacency, std::size_t k) {
  require(adjacency.rank() == 2 && adjacency.rows() == adjacency.cols(), "top_edges: adjacency must be square");
  const std::size_t n = adjacency.rows();
  if (k < 1 || k >= n) throw ContractViolation("top_edges: k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n) + ")");
  std::vector<Edge> edges;
  edges.reserve(n * k);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    order.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double wa = std::abs(adjacency(i, a)), wb = std::abs(adjacency(i, b));
                        if (wa != wb) return wa > wb;
                        return a < b;
                      });
    for (std::size_t r = 0; r < k; ++r) edges.push_back(Edge{i, order[r], adjacency(i, order[r])});
  }
  return edges;
}

}  // namespace dag
