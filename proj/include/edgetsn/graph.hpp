#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "edgetsn/ops.hpp"
#include "edgetsn/tensor.hpp"

namespace edgetsn {

struct NodeId {
  std::size_t index = 0;
};

enum class OpKind {
  input,
  parameter,
  conv2d,
  conv3d,
  bias_add,
  relu,
  max_pool2d,
  max_pool3d,
  global_avg_pool,
  affine,
  softmax,
  consensus_average,
  consensus_max,
  consensus_weighted,
  cross_entropy,
  mul,
  sum,
};

using GradientMap = std::map<std::string, Tensor>;

// A straight-line program over the primitive set. Nodes are appended in
// execution order, so every node's inputs precede it and the graph is
// acyclic by construction. Build once, then forward()/backward() any number
// of times; leaf values may be replaced between runs.
//
// Not thread-safe: one forward/backward in flight per instance.
class OpGraph {
 public:
  NodeId input(std::string name, Tensor value);
  NodeId parameter(std::string name, Tensor value, bool trainable = true);

  NodeId conv2d(NodeId x, NodeId kernels, std::size_t stride = 1, std::size_t padding = 0);
  NodeId conv3d(NodeId x, NodeId kernels, ops::Dims3 stride = {1, 1, 1}, ops::Dims3 padding = {0, 0, 0});
  NodeId bias_add(NodeId x, NodeId bias);
  NodeId relu(NodeId x);
  NodeId max_pool2d(NodeId x, std::size_t window, std::size_t stride);
  NodeId max_pool3d(NodeId x, ops::Dims3 window, ops::Dims3 stride);
  NodeId global_avg_pool(NodeId x);
  NodeId affine(NodeId x, NodeId weight, NodeId bias);
  NodeId softmax(NodeId x);
  NodeId consensus_average(std::vector<NodeId> rows);
  NodeId consensus_max(std::vector<NodeId> rows);
  NodeId consensus_weighted(std::vector<NodeId> rows, std::vector<double> weights);
  // -sum_i y_i (G_i - log sum_j exp G_j) with y one-hot at `label`.
  NodeId cross_entropy(NodeId scores, std::size_t label);
  NodeId mul(NodeId a, NodeId b);
  NodeId sum(NodeId x);

  void forward();
  bool executed() const noexcept { return executed_; }

  const Tensor& value(NodeId id) const;
  // Replaces an input or parameter value; the shape must be unchanged.
  void set_value(NodeId leaf, Tensor value);

  NodeId output() const;
  std::size_t node_count() const noexcept { return nodes_.size(); }
  OpKind kind(NodeId id) const { return node(id).kind; }

  // Names of trainable parameters in insertion order.
  std::vector<std::string> trainable_parameters() const;
  NodeId parameter_id(const std::string& name) const;
  void set_trainable(const std::string& name, bool trainable);

  // Reverse traversal from `out`, seeded with dL/d(out). Returns one gradient
  // per trainable parameter, shaped like the parameter (zero if unreachable).
  GradientMap backward(NodeId out, const Tensor& seed) const;
  GradientMap backward(const Tensor& seed) const { return backward(output(), seed); }

  // Gradient w.r.t. every node, for tests that need intermediate values.
  std::vector<Tensor> backward_all(NodeId out, const Tensor& seed) const;

 private:
  struct Node {
    OpKind kind = OpKind::input;
    std::vector<std::size_t> inputs;
    std::string name;
    bool trainable = false;
    ops::Dims3 stride{1, 1, 1};
    ops::Dims3 padding{0, 0, 0};
    ops::Dims3 window{1, 1, 1};
    std::vector<double> weights;
    std::size_t label = 0;
    Tensor value;
    std::vector<std::size_t> argmax;
  };

  static Node make_node(OpKind kind, std::vector<std::size_t> inputs);
  NodeId push(Node n);
  const Node& node(NodeId id) const;
  void check_ref(NodeId id) const;
  void evaluate(Node& n);

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> params_;
  bool executed_ = false;
};

}  // namespace edgetsn
