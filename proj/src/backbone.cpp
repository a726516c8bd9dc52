#include "edgetsn/backbone.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "edgetsn/error.hpp"
#include "edgetsn/ops.hpp"
#include "edgetsn/tensor_io.hpp"

namespace edgetsn {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(LayerType t) noexcept {
  switch (t) {
    case LayerType::conv:
      return "conv";
    case LayerType::relu:
      return "relu";
    case LayerType::max_pool:
      return "max_pool";
    case LayerType::global_avg_pool:
      return "global_avg_pool";
    case LayerType::affine:
      return "affine";
  }
  return "?";
}

std::string_view to_string(Dimensionality d) noexcept { return d == Dimensionality::d2 ? "2d" : "3d"; }

LayerType parse_layer_type(const std::string& s) {
  for (const LayerType t : {LayerType::conv, LayerType::relu, LayerType::max_pool, LayerType::global_avg_pool,
                            LayerType::affine}) {
    if (to_string(t) == s) {
      return t;
    }
  }
  throw ContractError("unknown layer type '" + s + "'");
}

Dimensionality parse_dims(const std::string& s) {
  if (s == "2d") {
    return Dimensionality::d2;
  }
  if (s == "3d") {
    return Dimensionality::d3;
  }
  throw ContractError("unknown dimensionality '" + s + "'");
}

namespace {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

[[noreturn]] void layer_error(const LayerSpec& l, const std::string& what) {
  throw ContractError("layer '" + l.name + "' (" + std::string(to_string(l.type)) + "): " + what);
}

}  // namespace

std::size_t BackboneSpec::parameter_count() const {
  std::size_t n = 0;
  for (const LayerSpec& l : layers) {
    if (l.has_weights()) {
      n += shape_numel(kernel_shape(*this, l)) + l.out_channels;
    }
  }
  return n;
}

void BackboneSpec::validate() const {
  if (num_classes == 0) {
    throw ContractError("num_classes must be positive");
  }
  if (stack_depth == 0) {
    throw ContractError("stack_depth must be positive");
  }
  if (dims == Dimensionality::d3 && stack_depth != 1) {
    throw ContractError("3d specs take frames on the time axis; stack_depth must be 1");
  }
  if (layers.empty() || layers.back().type != LayerType::affine) {
    throw ContractError("the final layer must be an affine head");
  }
  std::set<std::string> names;
  std::size_t channels = input_channels();
  bool flat = false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.name.empty() || !names.insert(l.name).second) {
      throw ContractError("layer " + std::to_string(i) + " needs a unique non-empty name");
    }
    if (dims == Dimensionality::d2 && (l.temporal_kernel != 1 || l.temporal_stride != 1 || l.temporal_padding != 0)) {
      layer_error(l, "temporal extents are only allowed in 3d specs");
    }
    if (l.stride == 0 || l.temporal_stride == 0 || l.kernel == 0 || l.temporal_kernel == 0) {
      layer_error(l, "kernel and stride must be positive");
    }
    switch (l.type) {
      case LayerType::conv:
        if (flat) {
          layer_error(l, "convolution after global pooling");
        }
        if (l.in_channels != channels) {
          layer_error(l, "expects " + std::to_string(l.in_channels) + " input channels but receives " +
                             std::to_string(channels));
        }
        if (l.out_channels == 0) {
          layer_error(l, "out_channels must be positive");
        }
        channels = l.out_channels;
        break;
      case LayerType::relu:
        break;
      case LayerType::max_pool:
        if (flat) {
          layer_error(l, "pooling after global pooling");
        }
        break;
      case LayerType::global_avg_pool:
        if (flat) {
          layer_error(l, "repeated global pooling");
        }
        flat = true;
        break;
      case LayerType::affine:
        if (i + 1 != layers.size()) {
          layer_error(l, "affine layers are only supported as the head");
        }
        if (!flat) {
          layer_error(l, "the head must follow global_avg_pool");
        }
        if (l.in_channels != channels) {
          layer_error(l, "expects " + std::to_string(l.in_channels) + " features but receives " +
                             std::to_string(channels));
        }
        if (l.out_channels != num_classes) {
          layer_error(l, "emits " + std::to_string(l.out_channels) + " scores, spec has " +
                             std::to_string(num_classes) + " classes");
        }
        break;
    }
  }
}

std::string BackboneSpec::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(to_json().dump())));
  return buf;
}

std::vector<Shape> BackboneSpec::infer_shapes(const Shape& input_shape) const {
  const bool is3d = dims == Dimensionality::d3;
  if (input_shape.size() != (is3d ? 4u : 3u) || input_shape[0] != input_channels()) {
    throw ShapeError("backbone expects " + std::string(is3d ? "C x T x H x W" : "C x H x W") + " input with " +
                     std::to_string(input_channels()) + " channels, got " + shape_to_string(input_shape));
  }
  std::vector<Shape> shapes;
  Shape cur = input_shape;
  for (const LayerSpec& l : layers) {
    switch (l.type) {
      case LayerType::conv:
      case LayerType::max_pool: {
        const std::size_t pad = l.type == LayerType::conv ? l.padding : 0;
        const std::size_t tpad = l.type == LayerType::conv ? l.temporal_padding : 0;
        Shape next = cur;
        next[0] = l.type == LayerType::conv ? l.out_channels : cur[0];
        const std::size_t off = is3d ? 2 : 1;
        if (is3d) {
          next[1] = ops::conv_out_dim(cur[1], l.temporal_kernel, l.temporal_stride, tpad);
        }
        next[off] = ops::conv_out_dim(cur[off], l.kernel, l.stride, pad);
        next[off + 1] = ops::conv_out_dim(cur[off + 1], l.kernel, l.stride, pad);
        cur = next;
        break;
      }
      case LayerType::relu:
        break;
      case LayerType::global_avg_pool:
        cur = {cur[0]};
        break;
      case LayerType::affine:
        cur = {l.out_channels};
        break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

ordered_json BackboneSpec::to_json() const {
  ordered_json j;
  j["modality"] = to_string(modality);
  j["dims"] = to_string(dims);
  j["num_classes"] = num_classes;
  j["stack_depth"] = stack_depth;
  ordered_json arr = ordered_json::array();
  for (const LayerSpec& l : layers) {
    ordered_json o;
    o["type"] = to_string(l.type);
    o["name"] = l.name;
    if (l.has_weights()) {
      o["in_channels"] = l.in_channels;
      o["out_channels"] = l.out_channels;
    }
    if (l.type == LayerType::conv || l.type == LayerType::max_pool) {
      o["kernel"] = l.kernel;
      o["stride"] = l.stride;
      if (l.type == LayerType::conv) {
        o["padding"] = l.padding;
      }
      if (dims == Dimensionality::d3) {
        o["temporal_kernel"] = l.temporal_kernel;
        o["temporal_stride"] = l.temporal_stride;
        if (l.type == LayerType::conv) {
          o["temporal_padding"] = l.temporal_padding;
        }
      }
    }
    arr.push_back(std::move(o));
  }
  j["layers"] = std::move(arr);
  return j;
}

BackboneSpec BackboneSpec::from_json(const json& j) {
  try {
    BackboneSpec spec;
    spec.modality = parse_modality(j.at("modality").get<std::string>());
    spec.dims = parse_dims(j.value("dims", std::string("2d")));
    spec.num_classes = j.at("num_classes").get<std::size_t>();
    spec.stack_depth = j.value("stack_depth", std::size_t{1});
    std::size_t channels = spec.input_channels();
    std::size_t index = 0;
    for (const json& o : j.at("layers")) {
      LayerSpec l;
      l.type = parse_layer_type(o.at("type").get<std::string>());
      l.name = o.value("name", std::string(to_string(l.type)) + std::to_string(++index));
      l.kernel = o.value("kernel", std::size_t{1});
      l.stride = o.value("stride", l.type == LayerType::max_pool ? l.kernel : std::size_t{1});
      l.padding = o.value("padding", std::size_t{0});
      l.temporal_kernel = o.value("temporal_kernel", std::size_t{1});
      l.temporal_stride = o.value("temporal_stride", std::size_t{1});
      l.temporal_padding = o.value("temporal_padding", std::size_t{0});
      if (l.type == LayerType::conv) {
        l.in_channels = o.value("in_channels", channels);
        l.out_channels = o.at("out_channels").get<std::size_t>();
        channels = l.out_channels;
      } else if (l.type == LayerType::affine) {
        l.in_channels = o.value("in_channels", channels);
        l.out_channels = o.value("out_channels", spec.num_classes);
      }
      spec.layers.push_back(std::move(l));
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ContractError(std::string("malformed backbone spec: ") + e.what());
  }
}

BackboneSpec default_backbone_spec(Modality modality, std::size_t num_classes, std::vector<std::size_t> widths) {
  BackboneSpec spec;
  spec.modality = modality;
  spec.num_classes = num_classes;
  std::size_t channels = spec.input_channels();
  for (std::size_t b = 0; b < widths.size(); ++b) {
    const std::string id = std::to_string(b + 1);
    spec.layers.push_back({LayerType::conv, "conv" + id, channels, widths[b], 3, 1, 1});
    spec.layers.push_back({LayerType::relu, "relu" + id});
    spec.layers.push_back({LayerType::max_pool, "pool" + id, 0, 0, 2, 2, 0});
    channels = widths[b];
  }
  spec.layers.push_back({LayerType::global_avg_pool, "gap"});
  spec.layers.push_back({LayerType::affine, "fc", channels, num_classes});
  spec.validate();
  return spec;
}

const Tensor& BackboneWeights::kernel(const std::string& layer) const {
  const auto it = params.find(layer + ".weight");
  if (it == params.end()) {
    throw ContractError("no weights for layer '" + layer + "'");
  }
  return it->second;
}

const Tensor& BackboneWeights::bias(const std::string& layer) const {
  const auto it = params.find(layer + ".bias");
  if (it == params.end()) {
    throw ContractError("no bias for layer '" + layer + "'");
  }
  return it->second;
}

Shape kernel_shape(const BackboneSpec& spec, const LayerSpec& l) {
  if (l.type == LayerType::affine) {
    return {l.out_channels, l.in_channels};
  }
  if (spec.dims == Dimensionality::d3) {
    return {l.out_channels, l.in_channels, l.temporal_kernel, l.kernel, l.kernel};
  }
  return {l.out_channels, l.in_channels, l.kernel, l.kernel};
}

BackboneWeights init_weights(const BackboneSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  BackboneWeights w;
  w.fingerprint = spec.fingerprint();
  for (const LayerSpec& l : spec.layers) {
    if (!l.has_weights()) {
      continue;
    }
    const Shape ks = kernel_shape(spec, l);
    const std::size_t fan_in = shape_numel(ks) / l.out_channels;
    const double gain = l.type == LayerType::conv ? 2.0 : 1.0;
    w.params.emplace(l.name + ".weight", Tensor::randn(ks, rng, std::sqrt(gain / static_cast<double>(fan_in))));
    w.params.emplace(l.name + ".bias", Tensor::zeros({l.out_channels}));
  }
  return w;
}

BackboneWeights zero_weights(const BackboneSpec& spec) {
  spec.validate();
  BackboneWeights w;
  w.fingerprint = spec.fingerprint();
  for (const LayerSpec& l : spec.layers) {
    if (l.has_weights()) {
      w.params.emplace(l.name + ".weight", Tensor::zeros(kernel_shape(spec, l)));
      w.params.emplace(l.name + ".bias", Tensor::zeros({l.out_channels}));
    }
  }
  return w;
}

void check_weights(const BackboneSpec& spec, const BackboneWeights& weights) {
  if (weights.fingerprint != spec.fingerprint()) {
    throw ContractError("weights were built for spec " + weights.fingerprint + ", not " + spec.fingerprint());
  }
  std::size_t expected = 0;
  for (const LayerSpec& l : spec.layers) {
    if (!l.has_weights()) {
      continue;
    }
    expected += 2;
    if (weights.kernel(l.name).shape() != kernel_shape(spec, l)) {
      throw ContractError("kernel of layer '" + l.name + "' has shape " +
                          shape_to_string(weights.kernel(l.name).shape()));
    }
    if (weights.bias(l.name).shape() != Shape{l.out_channels}) {
      throw ContractError("bias of layer '" + l.name + "' has the wrong shape");
    }
  }
  if (weights.params.size() != expected) {
    throw ContractError("weights contain tensors not described by the backbone layout");
  }
}

namespace {

Tensor apply_layer(const BackboneSpec& spec, const LayerSpec& l, const BackboneWeights& w, const Tensor& x) {
  const bool is3d = spec.dims == Dimensionality::d3;
  switch (l.type) {
    case LayerType::conv: {
      Tensor y = is3d ? ops::conv3d(x, w.kernel(l.name), {l.temporal_stride, l.stride, l.stride},
                                    {l.temporal_padding, l.padding, l.padding})
                      : ops::conv2d(x, w.kernel(l.name), l.stride, l.padding);
      ops::bias_add_inplace(y, w.bias(l.name));
      return y;
    }
    case LayerType::relu:
      return ops::relu(x);
    case LayerType::max_pool:
      return is3d ? ops::max_pool3d(x, {l.temporal_kernel, l.kernel, l.kernel}, {l.temporal_stride, l.stride, l.stride})
                  : ops::max_pool2d(x, l.kernel, l.stride);
    case LayerType::global_avg_pool:
      return ops::global_avg_pool(x);
    case LayerType::affine:
      return ops::affine(x, w.kernel(l.name), w.bias(l.name));
  }
  throw ContractError("unreachable layer type");
}

void check_input(const BackboneSpec& spec, const Tensor& snippet) {
  const std::size_t rank = spec.dims == Dimensionality::d3 ? 4 : 3;
  if (snippet.rank() != rank || snippet.dim(0) != spec.input_channels()) {
    throw ShapeError("snippet " + shape_to_string(snippet.shape()) + " does not match a " +
                     std::string(to_string(spec.dims)) + " " + std::string(to_string(spec.modality)) +
                     " backbone with " + std::to_string(spec.input_channels()) + " input channels");
  }
}

}  // namespace

std::vector<Tensor> forward_activations(const BackboneSpec& spec, const BackboneWeights& weights,
                                        const Tensor& snippet) {
  check_input(spec, snippet);
  std::vector<Tensor> acts;
  acts.reserve(spec.layers.size());
  const Tensor* cur = &snippet;
  for (const LayerSpec& l : spec.layers) {
    acts.push_back(apply_layer(spec, l, weights, *cur));
    cur = &acts.back();
  }
  return acts;
}

Tensor forward(const BackboneSpec& spec, const BackboneWeights& weights, const Tensor& snippet) {
  check_input(spec, snippet);
  Tensor cur = apply_layer(spec, spec.layers.front(), weights, snippet);
  for (std::size_t i = 1; i < spec.layers.size(); ++i) {
    cur = apply_layer(spec, spec.layers[i], weights, cur);
  }
  return cur;
}

namespace {

std::vector<Tensor> run_remaining_layers(const BackboneSpec& spec, const BackboneWeights& weights,
                                         std::vector<Tensor> cur) {
  for (std::size_t i = 1; i < spec.layers.size(); ++i) {
    std::vector<Tensor> next;
    next.reserve(cur.size());
    for (const Tensor& x : cur) {
      next.push_back(apply_layer(spec, spec.layers[i], weights, x));
    }
    cur = std::move(next);
  }
  return cur;
}

std::vector<Tensor> run_first_layer(const BackboneSpec& spec, const BackboneWeights& weights,
                                    std::span<const Tensor> snippets) {
  for (const Tensor& s : snippets) {
    check_input(spec, s);
  }
  std::vector<Tensor> out;
  out.reserve(snippets.size());
  for (const Tensor& s : snippets) {
    out.push_back(apply_layer(spec, spec.layers.front(), weights, s));
  }
  return out;
}

}  // namespace

std::vector<Tensor> forward_batch(const BackboneSpec& spec, const BackboneWeights& weights,
                                  std::span<const Tensor> snippets) {
  return run_remaining_layers(spec, weights, run_first_layer(spec, weights, snippets));
}

std::vector<Tensor> forward_batch(const BackboneSpec& spec, const BackboneWeights& weights,
                                  std::vector<Tensor>&& snippets) {
  std::vector<Tensor> inputs = std::move(snippets);
  std::vector<Tensor> first = run_first_layer(spec, weights, inputs);
  inputs.clear();
  inputs.shrink_to_fit();
  return run_remaining_layers(spec, weights, std::move(first));
}

ParameterNodes add_parameters(OpGraph& graph, const BackboneSpec& spec, const BackboneWeights& weights) {
  check_weights(spec, weights);
  ParameterNodes nodes;
  for (const auto& [name, tensor] : weights.params) {
    nodes.emplace(name, graph.parameter(name, tensor));
  }
  return nodes;
}

NodeId append_backbone(OpGraph& graph, const BackboneSpec& spec, const ParameterNodes& params, NodeId input) {
  check_input(spec, graph.value(input));
  const bool is3d = spec.dims == Dimensionality::d3;
  NodeId cur = input;
  for (const LayerSpec& l : spec.layers) {
    switch (l.type) {
      case LayerType::conv: {
        const NodeId k = params.at(l.name + ".weight");
        cur = is3d ? graph.conv3d(cur, k, {l.temporal_stride, l.stride, l.stride},
                                  {l.temporal_padding, l.padding, l.padding})
                   : graph.conv2d(cur, k, l.stride, l.padding);
        cur = graph.bias_add(cur, params.at(l.name + ".bias"));
        break;
      }
      case LayerType::relu:
        cur = graph.relu(cur);
        break;
      case LayerType::max_pool:
        cur = is3d ? graph.max_pool3d(cur, {l.temporal_kernel, l.kernel, l.kernel},
                                      {l.temporal_stride, l.stride, l.stride})
                   : graph.max_pool2d(cur, l.kernel, l.stride);
        break;
      case LayerType::global_avg_pool:
        cur = graph.global_avg_pool(cur);
        break;
      case LayerType::affine:
        cur = graph.affine(cur, params.at(l.name + ".weight"), params.at(l.name + ".bias"));
        break;
    }
  }
  return cur;
}

Tensor inflate_kernel(const Tensor& kernel2d, std::size_t temporal_size) {
  if (temporal_size < 1) {
    throw ContractError("temporal size must be >= 1");
  }
  if (kernel2d.rank() != 4) {
    throw ShapeError("inflate_kernel expects O x C x N x N, got " + shape_to_string(kernel2d.shape()));
  }
  const Shape& s = kernel2d.shape();
  Tensor out({s[0], s[1], temporal_size, s[2], s[3]});
  const std::size_t plane = s[2] * s[3];
  const double nt = static_cast<double>(temporal_size);
  for (std::size_t oc = 0; oc < s[0] * s[1]; ++oc) {
    const double* src = kernel2d.ptr() + oc * plane;
    for (std::size_t t = 0; t < temporal_size; ++t) {
      double* dst = out.ptr() + (oc * temporal_size + t) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        dst[i] = src[i] / nt;
      }
    }
  }
  return out;
}

std::pair<BackboneSpec, BackboneWeights> inflate_backbone(const BackboneSpec& spec2d,
                                                          const BackboneWeights& weights2d,
                                                          const TemporalSizes& temporal_sizes) {
  if (spec2d.dims != Dimensionality::d2) {
    throw ContractError("inflate_backbone expects a 2d spec");
  }
  check_weights(spec2d, weights2d);
  if (spec2d.stack_depth != 1) {
    throw ContractError("only single-frame 2d specs can be inflated");
  }
  BackboneSpec spec3d = spec2d;
  spec3d.dims = Dimensionality::d3;
  for (LayerSpec& l : spec3d.layers) {
    if (l.type != LayerType::conv && l.type != LayerType::max_pool) {
      continue;
    }
    const auto it = temporal_sizes.find(l.name);
    std::size_t nt = 0;
    if (it != temporal_sizes.end()) {
      nt = it->second;
    } else if (l.type == LayerType::max_pool) {
      nt = l.kernel;
    } else {
      throw ContractError("missing temporal size for layer '" + l.name + "'");
    }
    if (nt < 1) {
      throw ContractError("temporal size for layer '" + l.name + "' must be >= 1");
    }
    l.temporal_kernel = nt;
    l.temporal_padding = 0;
    l.temporal_stride = l.type == LayerType::max_pool ? nt : 1;
  }
  spec3d.validate();

  BackboneWeights weights3d;
  weights3d.fingerprint = spec3d.fingerprint();
  for (const LayerSpec& l : spec3d.layers) {
    if (l.type == LayerType::conv) {
      weights3d.params.emplace(l.name + ".weight", inflate_kernel(weights2d.kernel(l.name), l.temporal_kernel));
      weights3d.params.emplace(l.name + ".bias", weights2d.bias(l.name));
    } else if (l.type == LayerType::affine) {
      weights3d.params.emplace(l.name + ".weight", weights2d.kernel(l.name));
      weights3d.params.emplace(l.name + ".bias", weights2d.bias(l.name));
    }
  }
  return {std::move(spec3d), std::move(weights3d)};
}

namespace {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw DataError("cannot open " + path.string());
  }
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw DataError("cannot open " + path.string() + " for writing");
  }
  os << text;
}

}  // namespace

void save_spec(const std::filesystem::path& path, const BackboneSpec& spec) {
  write_text(path, spec.to_json().dump(2) + "\n");
}

BackboneSpec load_spec(const std::filesystem::path& path) { return BackboneSpec::from_json(read_json_file(path)); }

void save_backbone(const std::filesystem::path& dir, const BackboneSpec& spec, const BackboneWeights& weights) {
  check_weights(spec, weights);
  std::filesystem::create_directories(dir);
  save_spec(dir / "spec.json", spec);
  ordered_json index;
  index["fingerprint"] = weights.fingerprint;
  ordered_json files = ordered_json::object();
  for (const auto& [name, tensor] : weights.params) {
    const std::string file = name + ".ten";
    save_tensor(dir / file, tensor);
    files[name] = file;
  }
  index["tensors"] = std::move(files);
  write_text(dir / "index.json", index.dump(2) + "\n");
}

std::pair<BackboneSpec, BackboneWeights> load_backbone(const std::filesystem::path& dir) {
  BackboneSpec spec = load_spec(dir / "spec.json");
  const json index = read_json_file(dir / "index.json");
  BackboneWeights w;
  try {
    w.fingerprint = index.at("fingerprint").get<std::string>();
    for (const auto& [name, file] : index.at("tensors").items()) {
      w.params.emplace(name, load_tensor(dir / file.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw DataError((dir / "index.json").string() + ": " + e.what());
  }
  check_weights(spec, w);
  return {std::move(spec), std::move(w)};
}

TemporalSizes load_temporal_sizes(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  TemporalSizes sizes;
  try {
    for (const auto& [name, v] : j.items()) {
      sizes[name] = v.get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return sizes;
}

}  // namespace edgetsn
