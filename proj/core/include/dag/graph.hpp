#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "dag/autodiff.hpp"

namespace dag {

/// x [rows x in] -> x * weight + bias, weight [in x out], bias [out].
struct AffineParams {
  Parameter weight;
  Parameter bias;

  std::size_t in_width() const { return weight.value.dim(0); }
  std::size_t out_width() const { return weight.value.dim(1); }
};

/// Weights drawn from N(0, stddev^2); bias zero.
AffineParams make_affine(const std::string& name, std::size_t in, std::size_t out, double stddev,
                         std::mt19937_64& rng);
Var affine(Tape& tape, Var x, AffineParams& params);

struct GcnBlockParams {
  Parameter self_weight;      // W1, [in x out]
  Parameter neighbor_weight;  // W2, [in x out]
  Parameter bias;             // [out]
};

GcnBlockParams make_gcn_block(const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng);

/// Input projection (affine + relu) followed by residual GCN blocks.
struct GcnStackParams {
  AffineParams input_proj;
  std::vector<GcnBlockParams> blocks;

  std::vector<Parameter*> parameters();
  std::size_t hidden_width() const { return input_proj.out_width(); }
};

GcnStackParams make_gcn_stack(const std::string& name, std::size_t signal_width, std::size_t hidden,
                              std::size_t block_count, std::mt19937_64& rng);

/// Row i of the result is f_i W1 + sum_j e_ij f_j W2 + bias, over all j
/// including j = i.
Var graph_conv(Tape& tape, Var features, Var adjacency, GcnBlockParams& params);

/// features + relu(graph_conv(features)); requires equal in/out width.
Var residual_gcn_block(Tape& tape, Var features, Var adjacency, GcnBlockParams& params);

/// Returns K+1 node-feature matrices: the projected input, then the output of
/// each block in order.
std::vector<Var> gcn_stack(Tape& tape, Var signal, Var adjacency, GcnStackParams& params);

/// N x N connectivity with every entry 1/N, so each row sums to one.
Parameter init_adjacency(std::size_t landmark_count);

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// For each node i, the k off-diagonal entries with the largest |e_ij|; ties
/// go to the smaller j. Result is grouped by node, node order ascending.
std::vector<Edge> top_edges(const Tensor& adjacency, std::size_t k);

}  // namespace dag
