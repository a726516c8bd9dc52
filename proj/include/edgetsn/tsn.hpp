#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "edgetsn/backbone.hpp"
#include "edgetsn/graph.hpp"
#include "edgetsn/sampling.hpp"
#include "edgetsn/tensor.hpp"

namespace edgetsn {

enum class ConsensusKind { average, max, weighted_average };

std::string_view to_string(ConsensusKind k) noexcept;
ConsensusKind parse_consensus(std::string_view s);

// How the K snippet score vectors are combined into one video-level score.
struct ConsensusSpec {
  ConsensusKind kind = ConsensusKind::average;
  // weighted_average only: K nonnegative weights summing to 1.
  std::vector<double> weights;

  void validate(std::size_t k) const;
  bool operator==(const ConsensusSpec&) const = default;
};

// scores: K x C  ->  C
Tensor consensus(const Tensor& scores, const ConsensusSpec& spec);

Tensor one_hot(std::size_t label, std::size_t num_classes);
// Index of the single 1 in a one-hot vector; ContractError otherwise.
std::size_t one_hot_label(const Tensor& y);

// -sum_i y_i (G_i - log sum_j exp G_j), evaluated with log-sum-exp.
double tsn_loss(const Tensor& aggregate, const Tensor& y);

// K snippets of one video and its one-hot label.
struct LabeledSample {
  std::vector<Tensor> snippets;
  Tensor y;
};

struct TsnStep {
  double loss = 0.0;
  Tensor aggregate;           // G, the consensus of the raw snippet scores
  std::vector<Tensor> snippet_scores;
  GradientMap grads;          // dL/dW summed over all K snippet paths
};

// Builds F(T_k; W) for every snippet with one shared parameter set, the
// consensus G, and the loss on G; then backpropagates once through all paths.
TsnStep tsn_forward_backward(const BackboneSpec& spec, const BackboneWeights& weights, const LabeledSample& sample,
                             const ConsensusSpec& consensus_spec);

// The same computation as an OpGraph, for inspection and gradient checking.
// The graph output is the scalar loss.
struct TsnGraph {
  OpGraph graph;
  ParameterNodes params;
  std::vector<NodeId> inputs;
  std::vector<NodeId> snippet_scores;
  NodeId aggregate;
  NodeId loss;
};
TsnGraph build_tsn_graph(const BackboneSpec& spec, const BackboneWeights& weights, const LabeledSample& sample,
                         const ConsensusSpec& consensus_spec);

// Backpropagates `upstream` = dL/dF through a single snippet path.
GradientMap snippet_gradient(const BackboneSpec& spec, const BackboneWeights& weights, const Tensor& snippet,
                             const Tensor& upstream);

struct PredictOptions {
  std::size_t k = 25;
  CropDescriptor crop;
  ConsensusSpec consensus;
  // Frames per snippet on the time axis for 3d backbones.
  std::size_t temporal_frames = 1;
};

// Deterministic centre-frame sampling, per-crop raw scores averaged per
// snippet, consensus over snippets, then one softmax.
Tensor predict_video(const BackboneSpec& spec, const BackboneWeights& weights, const VideoClip& clip,
                     const PredictOptions& options);

// Softmax of the consensus of precomputed K x C snippet scores.
Tensor video_probabilities(const Tensor& snippet_scores, const ConsensusSpec& spec);

// w_rgb * p_rgb + (1 - w_rgb) * p_flow
Tensor fuse_streams(const Tensor& p_rgb, const Tensor& p_flow, double w_rgb);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> v);

}  // namespace edgetsn
