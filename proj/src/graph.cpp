#include "edgetsn/graph.hpp"

#include <algorithm>
#include <cmath>

#include "edgetsn/error.hpp"
#include "edgetsn/simd/kernels.hpp"

namespace edgetsn {

OpGraph::Node OpGraph::make_node(OpKind kind, std::vector<std::size_t> inputs) {
  Node n;
  n.kind = kind;
  n.inputs = std::move(inputs);
  return n;
}

NodeId OpGraph::push(Node n) {
  for (const std::size_t i : n.inputs) {
    check_ref(NodeId{i});
  }
  nodes_.push_back(std::move(n));
  executed_ = false;
  return NodeId{nodes_.size() - 1};
}

void OpGraph::check_ref(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw ContractError("node reference " + std::to_string(id.index) + " does not precede the new node");
  }
}

const OpGraph::Node& OpGraph::node(NodeId id) const {
  check_ref(id);
  return nodes_[id.index];
}

NodeId OpGraph::input(std::string name, Tensor value) {
  Node n = make_node(OpKind::input, {});
  n.name = std::move(name);
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId OpGraph::parameter(std::string name, Tensor value, bool trainable) {
  if (params_.count(name)) {
    throw ContractError("duplicate parameter name '" + name + "'");
  }
  Node n = make_node(OpKind::parameter, {});
  n.name = name;
  n.trainable = trainable;
  n.value = std::move(value);
  const NodeId id = push(std::move(n));
  params_[name] = id.index;
  return id;
}

NodeId OpGraph::conv2d(NodeId x, NodeId kernels, std::size_t stride, std::size_t padding) {
  Node n = make_node(OpKind::conv2d, {x.index, kernels.index});
  n.stride = {1, stride, stride};
  n.padding = {0, padding, padding};
  return push(std::move(n));
}

NodeId OpGraph::conv3d(NodeId x, NodeId kernels, ops::Dims3 stride, ops::Dims3 padding) {
  Node n = make_node(OpKind::conv3d, {x.index, kernels.index});
  n.stride = stride;
  n.padding = padding;
  return push(std::move(n));
}

NodeId OpGraph::bias_add(NodeId x, NodeId bias) { return push(make_node(OpKind::bias_add, {x.index, bias.index})); }

NodeId OpGraph::relu(NodeId x) { return push(make_node(OpKind::relu, {x.index})); }

NodeId OpGraph::max_pool2d(NodeId x, std::size_t window, std::size_t stride) {
  Node n = make_node(OpKind::max_pool2d, {x.index});
  n.window = {1, window, window};
  n.stride = {1, stride, stride};
  return push(std::move(n));
}

NodeId OpGraph::max_pool3d(NodeId x, ops::Dims3 window, ops::Dims3 stride) {
  Node n = make_node(OpKind::max_pool3d, {x.index});
  n.window = window;
  n.stride = stride;
  return push(std::move(n));
}

NodeId OpGraph::global_avg_pool(NodeId x) { return push(make_node(OpKind::global_avg_pool, {x.index})); }

NodeId OpGraph::affine(NodeId x, NodeId weight, NodeId bias) {
  return push(make_node(OpKind::affine, {x.index, weight.index, bias.index}));
}

NodeId OpGraph::softmax(NodeId x) { return push(make_node(OpKind::softmax, {x.index})); }

namespace {
std::vector<std::size_t> indices(const std::vector<NodeId>& rows) {
  if (rows.empty()) {
    throw ContractError("consensus needs at least one snippet");
  }
  std::vector<std::size_t> out;
  out.reserve(rows.size());
  for (const NodeId r : rows) {
    out.push_back(r.index);
  }
  return out;
}
}  // namespace

NodeId OpGraph::consensus_average(std::vector<NodeId> rows) {
  return push(make_node(OpKind::consensus_average, indices(rows)));
}

NodeId OpGraph::consensus_max(std::vector<NodeId> rows) { return push(make_node(OpKind::consensus_max, indices(rows))); }

NodeId OpGraph::consensus_weighted(std::vector<NodeId> rows, std::vector<double> weights) {
  if (weights.size() != rows.size()) {
    throw ContractError("weighted consensus has " + std::to_string(weights.size()) + " weights for " +
                        std::to_string(rows.size()) + " snippets");
  }
  Node n = make_node(OpKind::consensus_weighted, indices(rows));
  n.weights = std::move(weights);
  return push(std::move(n));
}

NodeId OpGraph::cross_entropy(NodeId scores, std::size_t label) {
  Node n = make_node(OpKind::cross_entropy, {scores.index});
  n.label = label;
  return push(std::move(n));
}

NodeId OpGraph::mul(NodeId a, NodeId b) { return push(make_node(OpKind::mul, {a.index, b.index})); }

NodeId OpGraph::sum(NodeId x) { return push(make_node(OpKind::sum, {x.index})); }

void OpGraph::evaluate(Node& n) {
  auto in = [&](std::size_t i) -> const Tensor& { return nodes_[n.inputs[i]].value; };
  switch (n.kind) {
    case OpKind::input:
    case OpKind::parameter:
      return;
    case OpKind::conv2d:
      n.value = ops::conv2d(in(0), in(1), n.stride[1], n.padding[1]);
      return;
    case OpKind::conv3d:
      n.value = ops::conv3d(in(0), in(1), n.stride, n.padding);
      return;
    case OpKind::bias_add:
      n.value = in(0);
      ops::bias_add_inplace(n.value, in(1));
      return;
    case OpKind::relu:
      n.value = ops::relu(in(0));
      return;
    case OpKind::max_pool2d: {
      auto r = ops::max_pool2d_indexed(in(0), n.window[1], n.stride[1]);
      n.value = std::move(r.output);
      n.argmax = std::move(r.argmax);
      return;
    }
    case OpKind::max_pool3d: {
      auto r = ops::max_pool3d_indexed(in(0), n.window, n.stride);
      n.value = std::move(r.output);
      n.argmax = std::move(r.argmax);
      return;
    }
    case OpKind::global_avg_pool:
      n.value = ops::global_avg_pool(in(0));
      return;
    case OpKind::affine:
      n.value = ops::affine(in(0), in(1), in(2));
      return;
    case OpKind::softmax:
      n.value = ops::softmax(in(0));
      return;
    case OpKind::consensus_average:
    case OpKind::consensus_max:
    case OpKind::consensus_weighted: {
      const Tensor& first = in(0);
      if (first.rank() != 1) {
        throw ShapeError("consensus rows must be score vectors, got " + shape_to_string(first.shape()));
      }
      const std::size_t K = n.inputs.size();
      const std::size_t C = first.size();
      for (std::size_t k = 1; k < K; ++k) {
        if (in(k).shape() != first.shape()) {
          throw ShapeError("consensus rows disagree in length");
        }
      }
      Tensor out({C});
      if (n.kind == OpKind::consensus_max) {
        n.argmax.assign(C, 0);
        for (std::size_t c = 0; c < C; ++c) {
          double best = first[c];
          for (std::size_t k = 1; k < K; ++k) {
            if (in(k)[c] > best) {
              best = in(k)[c];
              n.argmax[c] = k;
            }
          }
          out[c] = best;
        }
      } else if (n.kind == OpKind::consensus_average) {
        for (std::size_t k = 0; k < K; ++k) {
          simd::kernels().add(C, in(k).ptr(), out.ptr());
        }
        simd::kernels().scale(C, 1.0 / static_cast<double>(K), out.ptr());
      } else {
        for (std::size_t k = 0; k < K; ++k) {
          simd::kernels().axpy(C, n.weights[k], in(k).ptr(), out.ptr());
        }
      }
      n.value = std::move(out);
      return;
    }
    case OpKind::cross_entropy: {
      const Tensor& g = in(0);
      if (n.label >= g.size()) {
        throw ContractError("label " + std::to_string(n.label) + " outside " + std::to_string(g.size()) + " classes");
      }
      n.value = Tensor::scalar(ops::log_sum_exp(g.data()) - g[n.label]);
      return;
    }
    case OpKind::mul: {
      if (in(0).shape() != in(1).shape()) {
        throw ShapeError("mul: operand shapes differ");
      }
      Tensor out(in(0).shape());
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = in(0)[i] * in(1)[i];
      }
      n.value = std::move(out);
      return;
    }
    case OpKind::sum: {
      double s = 0.0;
      for (const double v : in(0).data()) {
        s += v;
      }
      n.value = Tensor::scalar(s);
      return;
    }
  }
}

void OpGraph::forward() {
  executed_ = false;
  for (Node& n : nodes_) {
    evaluate(n);
  }
  executed_ = true;
}

const Tensor& OpGraph::value(NodeId id) const {
  const Node& n = node(id);
  if (!executed_ && n.kind != OpKind::input && n.kind != OpKind::parameter) {
    throw StateError("graph has not been executed");
  }
  return n.value;
}

void OpGraph::set_value(NodeId leaf, Tensor value) {
  check_ref(leaf);
  Node& n = nodes_[leaf.index];
  if (n.kind != OpKind::input && n.kind != OpKind::parameter) {
    throw ContractError("only inputs and parameters can be assigned");
  }
  if (value.shape() != n.value.shape()) {
    throw ShapeError("set_value: " + shape_to_string(value.shape()) + " does not match " +
                     shape_to_string(n.value.shape()));
  }
  n.value = std::move(value);
  executed_ = false;
}

NodeId OpGraph::output() const {
  if (nodes_.empty()) {
    throw StateError("empty graph has no output");
  }
  return NodeId{nodes_.size() - 1};
}

std::vector<std::string> OpGraph::trainable_parameters() const {
  std::vector<std::string> names;
  for (const Node& n : nodes_) {
    if (n.kind == OpKind::parameter && n.trainable) {
      names.push_back(n.name);
    }
  }
  return names;
}

NodeId OpGraph::parameter_id(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) {
    throw ContractError("unknown parameter '" + name + "'");
  }
  return NodeId{it->second};
}

void OpGraph::set_trainable(const std::string& name, bool trainable) {
  nodes_[parameter_id(name).index].trainable = trainable;
}

std::vector<Tensor> OpGraph::backward_all(NodeId out, const Tensor& seed) const {
  if (!executed_) {
    throw StateError("backward called before forward");
  }
  check_ref(out);
  if (seed.shape() != nodes_[out.index].value.shape()) {
    throw ShapeError("seed gradient " + shape_to_string(seed.shape()) + " does not match output " +
                     shape_to_string(nodes_[out.index].value.shape()));
  }

  const std::size_t count = out.index + 1;
  std::vector<bool> needs(count, false);
  for (std::size_t i = 0; i < count; ++i) {
    const Node& n = nodes_[i];
    if (n.kind == OpKind::parameter) {
      needs[i] = n.trainable;
    } else if (n.kind != OpKind::input) {
      needs[i] = std::any_of(n.inputs.begin(), n.inputs.end(), [&](std::size_t j) { return needs[j]; });
    }
  }

  std::vector<Tensor> grads(count);
  grads[out.index] = seed;
  auto grad_for = [&](std::size_t j) -> Tensor* {
    if (!needs[j]) {
      return nullptr;
    }
    if (grads[j].empty()) {
      grads[j] = Tensor::zeros(nodes_[j].value.shape());
    }
    return &grads[j];
  };

  for (std::size_t i = count; i-- > 0;) {
    const Node& n = nodes_[i];
    if (grads[i].empty() || !needs[i]) {
      continue;
    }
    const Tensor& g = grads[i];
    auto in = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k]].value; };
    switch (n.kind) {
      case OpKind::input:
      case OpKind::parameter:
        break;
      case OpKind::conv2d:
        ops::conv2d_backward(in(0), in(1), g, n.stride[1], n.padding[1], grad_for(n.inputs[0]),
                             grad_for(n.inputs[1]));
        break;
      case OpKind::conv3d:
        ops::conv3d_backward(in(0), in(1), g, n.stride, n.padding, grad_for(n.inputs[0]), grad_for(n.inputs[1]));
        break;
      case OpKind::bias_add:
        if (Tensor* gx = grad_for(n.inputs[0])) {
          simd::kernels().add(g.size(), g.ptr(), gx->ptr());
        }
        if (Tensor* gb = grad_for(n.inputs[1])) {
          ops::bias_add_backward(g, *gb);
        }
        break;
      case OpKind::relu:
        if (Tensor* gx = grad_for(n.inputs[0])) {
          ops::relu_backward(in(0), g, *gx);
        }
        break;
      case OpKind::max_pool2d:
      case OpKind::max_pool3d:
        if (Tensor* gx = grad_for(n.inputs[0])) {
          ops::max_pool_backward(n.argmax, g, *gx);
        }
        break;
      case OpKind::global_avg_pool:
        if (Tensor* gx = grad_for(n.inputs[0])) {
          ops::global_avg_pool_backward(g, *gx);
        }
        break;
      case OpKind::affine:
        ops::affine_backward(in(0), in(1), g, grad_for(n.inputs[0]), grad_for(n.inputs[1]), grad_for(n.inputs[2]));
        break;
      case OpKind::softmax:
        if (Tensor* gx = grad_for(n.inputs[0])) {
          ops::softmax_backward(n.value, g, *gx);
        }
        break;
      case OpKind::consensus_average: {
        const double w = 1.0 / static_cast<double>(n.inputs.size());
        for (const std::size_t j : n.inputs) {
          if (Tensor* gx = grad_for(j)) {
            simd::kernels().axpy(g.size(), w, g.ptr(), gx->ptr());
          }
        }
        break;
      }
      case OpKind::consensus_weighted:
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          if (Tensor* gx = grad_for(n.inputs[k])) {
            simd::kernels().axpy(g.size(), n.weights[k], g.ptr(), gx->ptr());
          }
        }
        break;
      case OpKind::consensus_max:
        for (std::size_t c = 0; c < g.size(); ++c) {
          if (Tensor* gx = grad_for(n.inputs[n.argmax[c]])) {
            (*gx)[c] += g[c];
          }
        }
        break;
      case OpKind::cross_entropy:
        if (Tensor* gx = grad_for(n.inputs[0])) {
          const Tensor p = ops::softmax(in(0));
          for (std::size_t c = 0; c < p.size(); ++c) {
            (*gx)[c] += g[0] * (p[c] - (c == n.label ? 1.0 : 0.0));
          }
        }
        break;
      case OpKind::mul:
        for (std::size_t k = 0; k < 2; ++k) {
          if (Tensor* gx = grad_for(n.inputs[k])) {
            const Tensor& other = in(1 - k);
            for (std::size_t e = 0; e < g.size(); ++e) {
              (*gx)[e] += g[e] * other[e];
            }
          }
        }
        break;
      case OpKind::sum:
        if (Tensor* gx = grad_for(n.inputs[0])) {
          for (double& v : gx->data()) {
            v += g[0];
          }
        }
        break;
    }
  }
  return grads;
}

GradientMap OpGraph::backward(NodeId out, const Tensor& seed) const {
  std::vector<Tensor> all = backward_all(out, seed);
  GradientMap result;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.kind != OpKind::parameter || !n.trainable) {
      continue;
    }
    if (i < all.size() && !all[i].empty()) {
      result.emplace(n.name, std::move(all[i]));
    } else {
      result.emplace(n.name, Tensor::zeros(n.value.shape()));
    }
  }
  return result;
}

}  // namespace edgetsn
