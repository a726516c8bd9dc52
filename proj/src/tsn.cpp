#include "edgetsn/tsn.hpp"

#include <algorithm>
#include <cmath>

#include "edgetsn/error.hpp"
#include "edgetsn/ops.hpp"

namespace edgetsn {

std::string_view to_string(ConsensusKind k) noexcept {
  switch (k) {
    case ConsensusKind::average:
      return "average";
    case ConsensusKind::max:
      return "max";
    case ConsensusKind::weighted_average:
      return "weighted_average";
  }
  return "?";
}

ConsensusKind parse_consensus(std::string_view s) {
  for (const ConsensusKind k : {ConsensusKind::average, ConsensusKind::max, ConsensusKind::weighted_average}) {
    if (to_string(k) == s) {
      return k;
    }
  }
  throw ContractError("unknown consensus '" + std::string(s) + "'");
}

void ConsensusSpec::validate(std::size_t k) const {
  if (k == 0) {
    throw ContractError("consensus needs K >= 1");
  }
  if (kind != ConsensusKind::weighted_average) {
    return;
  }
  if (weights.size() != k) {
    throw ContractError("weighted consensus has " + std::to_string(weights.size()) + " weights for K = " +
                        std::to_string(k));
  }
  double total = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0)) {
      throw ContractError("consensus weights must be nonnegative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ContractError("consensus weights must sum to 1");
  }
}

Tensor consensus(const Tensor& scores, const ConsensusSpec& spec) {
  if (scores.rank() != 2) {
    throw ShapeError("consensus expects K x C scores, got " + shape_to_string(scores.shape()));
  }
  const std::size_t K = scores.dim(0);
  const std::size_t C = scores.dim(1);
  spec.validate(K);
  Tensor g({C});
  for (std::size_t c = 0; c < C; ++c) {
    switch (spec.kind) {
      case ConsensusKind::average: {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          s += scores[k * C + c];
        }
        g[c] = s / static_cast<double>(K);
        break;
      }
      case ConsensusKind::max: {
        double m = scores[c];
        for (std::size_t k = 1; k < K; ++k) {
          m = std::max(m, scores[k * C + c]);
        }
        g[c] = m;
        break;
      }
      case ConsensusKind::weighted_average: {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          s += spec.weights[k] * scores[k * C + c];
        }
        g[c] = s;
        break;
      }
    }
  }
  return g;
}

Tensor one_hot(std::size_t label, std::size_t num_classes) {
  if (label >= num_classes) {
    throw ContractError("label " + std::to_string(label) + " outside " + std::to_string(num_classes) + " classes");
  }
  Tensor y({num_classes});
  y[label] = 1.0;
  return y;
}

std::size_t one_hot_label(const Tensor& y) {
  std::size_t ones = 0;
  std::size_t label = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 1.0) {
      ++ones;
      label = i;
    } else if (y[i] != 0.0) {
      throw ContractError("label vector is not one-hot");
    }
  }
  if (ones != 1 || y.rank() != 1) {
    throw ContractError("label vector is not one-hot");
  }
  return label;
}

double tsn_loss(const Tensor& aggregate, const Tensor& y) {
  if (aggregate.shape() != y.shape() || aggregate.rank() != 1) {
    throw ShapeError("tsn_loss: scores " + shape_to_string(aggregate.shape()) + " vs labels " +
                     shape_to_string(y.shape()));
  }
  one_hot_label(y);
  if (!aggregate.all_finite()) {
    throw ContractError("tsn_loss: non-finite scores");
  }
  const double lse = ops::log_sum_exp(aggregate.data());
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0) {
      loss -= y[i] * (aggregate[i] - lse);
    }
  }
  return loss;
}

TsnGraph build_tsn_graph(const BackboneSpec& spec, const BackboneWeights& weights, const LabeledSample& sample,
                         const ConsensusSpec& consensus_spec) {
  const std::size_t label = one_hot_label(sample.y);
  if (sample.y.size() != spec.num_classes) {
    throw ShapeError("label vector has " + std::to_string(sample.y.size()) + " entries, backbone has " +
                     std::to_string(spec.num_classes) + " classes");
  }
  consensus_spec.validate(sample.snippets.size());
  TsnGraph t;
  t.params = add_parameters(t.graph, spec, weights);
  for (std::size_t k = 0; k < sample.snippets.size(); ++k) {
    const NodeId in = t.graph.input("snippet" + std::to_string(k), sample.snippets[k]);
    t.inputs.push_back(in);
    t.snippet_scores.push_back(append_backbone(t.graph, spec, t.params, in));
  }
  switch (consensus_spec.kind) {
    case ConsensusKind::average:
      t.aggregate = t.graph.consensus_average(t.snippet_scores);
      break;
    case ConsensusKind::max:
      t.aggregate = t.graph.consensus_max(t.snippet_scores);
      break;
    case ConsensusKind::weighted_average:
      t.aggregate = t.graph.consensus_weighted(t.snippet_scores, consensus_spec.weights);
      break;
  }
  t.loss = t.graph.cross_entropy(t.aggregate, label);
  return t;
}

TsnStep tsn_forward_backward(const BackboneSpec& spec, const BackboneWeights& weights, const LabeledSample& sample,
                             const ConsensusSpec& consensus_spec) {
  TsnGraph t = build_tsn_graph(spec, weights, sample, consensus_spec);
  t.graph.forward();
  TsnStep step;
  step.loss = t.graph.value(t.loss)[0];
  step.aggregate = t.graph.value(t.aggregate);
  for (const NodeId s : t.snippet_scores) {
    step.snippet_scores.push_back(t.graph.value(s));
  }
  step.grads = t.graph.backward(t.loss, Tensor::scalar(1.0));
  return step;
}

GradientMap snippet_gradient(const BackboneSpec& spec, const BackboneWeights& weights, const Tensor& snippet,
                             const Tensor& upstream) {
  OpGraph g;
  const ParameterNodes params = add_parameters(g, spec, weights);
  const NodeId in = g.input("snippet", snippet);
  const NodeId out = append_backbone(g, spec, params, in);
  g.forward();
  return g.backward(out, upstream);
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) {
    throw ShapeError("argmax of empty vector");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) {
      best = i;
    }
  }
  return best;
}

Tensor video_probabilities(const Tensor& snippet_scores, const ConsensusSpec& spec) {
  return ops::softmax(consensus(snippet_scores, spec));
}

Tensor predict_video(const BackboneSpec& spec, const BackboneWeights& weights, const VideoClip& clip,
                     const PredictOptions& options) {
  const std::vector<std::size_t> indices = testing_indices(clip.frame_count(), options.k);
  const bool needs_stack = spec.dims == Dimensionality::d3 || spec.stack_depth > 1;
  const Shape& fs = clip.frame_shape();
  const std::size_t ch = options.crop.height ? options.crop.height : fs[1];
  const std::size_t cw = options.crop.width ? options.crop.width : fs[2];

  Tensor scores({indices.size(), spec.num_classes});
  for (std::size_t k = 0; k < indices.size(); ++k) {
    Tensor stacked;
    if (needs_stack) {
      stacked = make_snippet(clip, indices[k], spec, options.temporal_frames);
    }
    const Tensor& src = needs_stack ? stacked : clip.frames[indices[k]];
    std::vector<Tensor> crops = crop(src, options.crop.strategy, ch, cw, options.crop.seed + k);
    stacked = Tensor();
    const std::vector<Tensor> crop_scores = forward_batch(spec, weights, std::move(crops));
    double* row = scores.ptr() + k * spec.num_classes;
    for (const Tensor& s : crop_scores) {
      for (std::size_t c = 0; c < spec.num_classes; ++c) {
        row[c] += s[c];
      }
    }
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      row[c] /= static_cast<double>(crop_scores.size());
    }
  }
  return video_probabilities(scores, options.consensus);
}

Tensor fuse_streams(const Tensor& p_rgb, const Tensor& p_flow, double w_rgb) {
  if (p_rgb.shape() != p_flow.shape() || p_rgb.rank() != 1) {
    throw ShapeError("fuse_streams: " + shape_to_string(p_rgb.shape()) + " vs " + shape_to_string(p_flow.shape()));
  }
  if (!(w_rgb >= 0.0 && w_rgb <= 1.0)) {
    throw ContractError("fusion weight must lie in [0, 1]");
  }
  Tensor out(p_rgb.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = w_rgb * p_rgb[i] + (1.0 - w_rgb) * p_flow[i];
  }
  return out;
}

}  // namespace edgetsn
