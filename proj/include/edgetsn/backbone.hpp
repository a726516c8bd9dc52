#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "edgetsn/graph.hpp"
#include "edgetsn/modality.hpp"
#include "edgetsn/tensor.hpp"

namespace edgetsn {

enum class Dimensionality { d2, d3 };
enum class LayerType { conv, relu, max_pool, global_avg_pool, affine };

std::string_view to_string(LayerType t) noexcept;
std::string_view to_string(Dimensionality d) noexcept;
LayerType parse_layer_type(const std::string& s);
Dimensionality parse_dims(const std::string& s);

struct LayerSpec {
  LayerType type = LayerType::relu;
  std::string name;
  // conv: in/out channels. affine: in = feature length, out = class count.
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  // conv kernel size or pooling window, spatial axes.
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  // Temporal extent, only meaningful for 3d specs.
  std::size_t temporal_kernel = 1;
  std::size_t temporal_stride = 1;
  std::size_t temporal_padding = 0;

  bool has_weights() const noexcept { return type == LayerType::conv || type == LayerType::affine; }
  bool operator==(const LayerSpec&) const = default;
};

// Architecture of the snippet-level ConvNet. Layers run in order; the last
// one is an affine head emitting num_classes raw scores.
struct BackboneSpec {
  Modality modality = Modality::rgb;
  Dimensionality dims = Dimensionality::d2;
  std::size_t num_classes = 0;
  // Consecutive frames stacked along the channel axis per 2d snippet. 3d
  // snippets carry their frames on the time axis, so 3d specs keep 1 here.
  std::size_t stack_depth = 1;
  std::vector<LayerSpec> layers;

  std::size_t input_channels() const noexcept { return modality_channels(modality) * stack_depth; }
  std::size_t parameter_count() const;

  // Throws ContractError on an inconsistent channel chain, a missing head,
  // duplicate layer names or 3d extents on a 2d spec.
  void validate() const;
  std::string fingerprint() const;

  // Output shape of every layer for a single input of `input_shape`
  // (C x H x W or C x T x H x W). Throws ShapeError if a window does not fit.
  std::vector<Shape> infer_shapes(const Shape& input_shape) const;

  nlohmann::ordered_json to_json() const;
  static BackboneSpec from_json(const nlohmann::json& j);

  bool operator==(const BackboneSpec&) const = default;
};

// Four conv(3x3, pad 1) + relu + max_pool(2) blocks, global average pool and
// an affine head.
BackboneSpec default_backbone_spec(Modality modality, std::size_t num_classes,
                                   std::vector<std::size_t> widths = {8, 8, 16, 16});

// Parameters keyed "<layer>.weight" and "<layer>.bias", shared by every
// snippet of a batch.
struct BackboneWeights {
  std::map<std::string, Tensor> params;
  std::string fingerprint;

  const Tensor& kernel(const std::string& layer) const;
  const Tensor& bias(const std::string& layer) const;
  bool operator==(const BackboneWeights&) const = default;
};

Shape kernel_shape(const BackboneSpec& spec, const LayerSpec& layer);
// He-normal kernels, zero biases.
BackboneWeights init_weights(const BackboneSpec& spec, std::uint64_t seed);
BackboneWeights zero_weights(const BackboneSpec& spec);
// Throws ContractError if a tensor is missing, misshapen, or the fingerprint
// belongs to another spec.
void check_weights(const BackboneSpec& spec, const BackboneWeights& weights);

// Raw class scores for one snippet (C x H x W for 2d, C x T x H x W for 3d).
Tensor forward(const BackboneSpec& spec, const BackboneWeights& weights, const Tensor& snippet);

// Scores for several snippets, evaluated layer by layer so that all
// activations of one layer are resident together (the batched executor).
std::vector<Tensor> forward_batch(const BackboneSpec& spec, const BackboneWeights& weights,
                                  std::span<const Tensor> snippets);
// As above, releasing the inputs once the first layer has consumed them.
std::vector<Tensor> forward_batch(const BackboneSpec& spec, const BackboneWeights& weights,
                                  std::vector<Tensor>&& snippets);

// Output of every layer for one snippet, in layer order.
std::vector<Tensor> forward_activations(const BackboneSpec& spec, const BackboneWeights& weights,
                                        const Tensor& snippet);

// Graph parameters for the weights, all trainable.
using ParameterNodes = std::map<std::string, NodeId>;
ParameterNodes add_parameters(OpGraph& graph, const BackboneSpec& spec, const BackboneWeights& weights);
// Appends F(input; W) to the graph and returns the score node.
NodeId append_backbone(OpGraph& graph, const BackboneSpec& spec, const ParameterNodes& params, NodeId input);

// --- 2D -> 3D inflation -----------------------------------------------------

// O x C x N x N  ->  O x C x Nt x N x N with every temporal slice kernel / Nt.
Tensor inflate_kernel(const Tensor& kernel2d, std::size_t temporal_size);

// Temporal extents keyed by layer name. Every conv layer needs an entry;
// pooling layers without one reuse their spatial window.
using TemporalSizes = std::map<std::string, std::size_t>;

std::pair<BackboneSpec, BackboneWeights> inflate_backbone(const BackboneSpec& spec2d,
                                                          const BackboneWeights& weights2d,
                                                          const TemporalSizes& temporal_sizes);

// --- persistence -------------------------------------------------------------

void save_spec(const std::filesystem::path& path, const BackboneSpec& spec);
BackboneSpec load_spec(const std::filesystem::path& path);

// Directory holding spec.json, index.json and one .ten file per tensor.
void save_backbone(const std::filesystem::path& dir, const BackboneSpec& spec, const BackboneWeights& weights);
std::pair<BackboneSpec, BackboneWeights> load_backbone(const std::filesystem::path& dir);

TemporalSizes load_temporal_sizes(const std::filesystem::path& path);

}  // namespace edgetsn
