#include "edgetsn/memory.hpp"

#include <cstdio>
#include <sstream>

#include "edgetsn/alloc_tracker.hpp"
#include "edgetsn/error.hpp"

namespace edgetsn {

using nlohmann::json;
using nlohmann::ordered_json;

void InferenceProtocol::validate() const {
  if (k == 0) {
    throw ContractError("protocol needs K >= 1");
  }
  if (batch_size == 0) {
    throw ContractError("protocol needs batch size >= 1");
  }
  if ((crop_height == 0) != (crop_width == 0)) {
    throw ContractError("crop height and width must both be set or both be 0");
  }
  if (temporal_frames == 0) {
    throw ContractError("protocol needs at least one frame per snippet");
  }
}

namespace {

constexpr std::uint64_t kBytesPerElement = sizeof(double);

struct UnitPeak {
  std::vector<LayerMemory> layers;
  std::uint64_t peak = 0;
  std::size_t peak_layer = 0;
};

UnitPeak per_crop_peak(const BackboneSpec& spec, const Shape& input_shape) {
  const std::vector<Shape> shapes = spec.infer_shapes(input_shape);
  UnitPeak u;
  std::uint64_t in_bytes = shape_numel(input_shape) * kBytesPerElement;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    LayerMemory l;
    l.name = spec.layers[i].name;
    l.type = spec.layers[i].type;
    l.output_shape = shapes[i];
    l.input_bytes = in_bytes;
    l.output_bytes = shape_numel(shapes[i]) * kBytesPerElement;
    const std::uint64_t live = l.input_bytes + l.output_bytes;
    if (live > u.peak) {
      u.peak = live;
      u.peak_layer = i;
    }
    in_bytes = l.output_bytes;
    u.layers.push_back(std::move(l));
  }
  return u;
}

}  // namespace

MemoryReport profile_inference(const BackboneSpec& spec, const InferenceProtocol& protocol, std::size_t frame_height,
                               std::size_t frame_width) {
  spec.validate();
  protocol.validate();
  const std::size_t h = protocol.crop_height ? protocol.crop_height : frame_height;
  const std::size_t w = protocol.crop_width ? protocol.crop_width : frame_width;
  if (h == 0 || w == 0 || h > frame_height || w > frame_width) {
    throw ContractError("crop " + std::to_string(h) + "x" + std::to_string(w) + " does not fit frame " +
                        std::to_string(frame_height) + "x" + std::to_string(frame_width));
  }
  const Shape input = spec.dims == Dimensionality::d3
                          ? Shape{spec.input_channels(), protocol.temporal_frames, h, w}
                          : Shape{spec.input_channels(), h, w};

  UnitPeak unit = per_crop_peak(spec, input);
  const std::uint64_t scale = protocol.crop_count() * protocol.batch_size;

  MemoryReport r;
  r.protocol = protocol;
  r.architecture = std::string(to_string(spec.dims)) + "-" + std::string(to_string(spec.modality));
  r.input_shape = input;
  r.parameter_bytes = spec.parameter_count() * kBytesPerElement;
  r.peak_layer = unit.peak_layer;
  for (LayerMemory& l : unit.layers) {
    l.live_bytes = (l.input_bytes + l.output_bytes) * scale;
  }
  r.layers = std::move(unit.layers);
  r.peak_activation_bytes = unit.peak * scale;
  r.total_peak_bytes = r.parameter_bytes + r.peak_activation_bytes;

  // The executor model is linear in crops: recompute via the per-layer table
  // at one crop and at the requested count and make sure they agree.
  std::uint64_t one = 0;
  std::uint64_t many = 0;
  for (const LayerMemory& l : r.layers) {
    one = std::max(one, (l.input_bytes + l.output_bytes) * protocol.batch_size);
    many = std::max(many, l.live_bytes);
  }
  if (many != one * protocol.crop_count() || many != r.peak_activation_bytes) {
    throw StateError("activation model is not linear in crop count");
  }
  return r;
}

std::uint64_t measure_runtime_peak(const std::function<void()>& run) {
  const AllocScope scope;
  run();
  return scope.peak_above_baseline();
}

ordered_json MemoryReport::to_json() const {
  ordered_json j;
  j["architecture"] = architecture;
  j["protocol"] = {{"k", protocol.k},
                   {"crop_strategy", std::string(to_string(protocol.strategy))},
                   {"crop_count", protocol.crop_count()},
                   {"batch_size", protocol.batch_size},
                   {"crop_height", protocol.crop_height},
                   {"crop_width", protocol.crop_width},
                   {"temporal_frames", protocol.temporal_frames}};
  j["input_shape"] = input_shape;
  j["parameter_bytes"] = parameter_bytes;
  j["peak_activation_bytes"] = peak_activation_bytes;
  j["total_peak_bytes"] = total_peak_bytes;
  j["peak_layer"] = peak_layer;
  ordered_json rows = ordered_json::array();
  for (const LayerMemory& l : layers) {
    rows.push_back({{"name", l.name},
                      {"type", std::string(to_string(l.type))},
                      {"output_shape", l.output_shape},
                      {"input_bytes", l.input_bytes},
                      {"output_bytes", l.output_bytes},
                      {"live_bytes", l.live_bytes}});
  }
  j["layers"] = std::move(rows);
  return j;
}

MemoryReport MemoryReport::from_json(const json& j) {
  try {
    MemoryReport r;
    r.architecture = j.at("architecture").get<std::string>();
    const json& p = j.at("protocol");
    r.protocol.k = p.at("k").get<std::size_t>();
    r.protocol.strategy = parse_crop_strategy(p.at("crop_strategy").get<std::string>());
    r.protocol.batch_size = p.at("batch_size").get<std::size_t>();
    r.protocol.crop_height = p.at("crop_height").get<std::size_t>();
    r.protocol.crop_width = p.at("crop_width").get<std::size_t>();
    r.protocol.temporal_frames = p.at("temporal_frames").get<std::size_t>();
    r.input_shape = j.at("input_shape").get<Shape>();
    r.parameter_bytes = j.at("parameter_bytes").get<std::uint64_t>();
    r.peak_activation_bytes = j.at("peak_activation_bytes").get<std::uint64_t>();
    r.total_peak_bytes = j.at("total_peak_bytes").get<std::uint64_t>();
    r.peak_layer = j.at("peak_layer").get<std::size_t>();
    for (const json& l : j.at("layers")) {
      LayerMemory m;
      m.name = l.at("name").get<std::string>();
      m.type = parse_layer_type(l.at("type").get<std::string>());
      m.output_shape = l.at("output_shape").get<Shape>();
      m.input_bytes = l.at("input_bytes").get<std::uint64_t>();
      m.output_bytes = l.at("output_bytes").get<std::uint64_t>();
      m.live_bytes = l.at("live_bytes").get<std::uint64_t>();
      r.layers.push_back(std::move(m));
    }
    if (r.total_peak_bytes != r.parameter_bytes + r.peak_activation_bytes) {
      throw DataError("memory report totals do not add up");
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed memory report: ") + e.what());
  }
}

std::string format_memory_table(const std::vector<MemoryReport>& reports, const std::vector<double>& top1) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %6s %6s %8s %16s %16s %16s\n", "arch", "batch", "crops", "top1",
                "params_bytes", "act_bytes", "total_bytes");
  out << line;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const MemoryReport& r = reports[i];
    char acc[16] = "-";
    if (i < top1.size()) {
      std::snprintf(acc, sizeof acc, "%.4f", top1[i]);
    }
    std::snprintf(line, sizeof line, "%-12s %6zu %6zu %8s %16llu %16llu %16llu\n", r.architecture.c_str(),
                  r.protocol.batch_size, r.protocol.crop_count(), acc,
                  static_cast<unsigned long long>(r.parameter_bytes),
                  static_cast<unsigned long long>(r.peak_activation_bytes),
                  static_cast<unsigned long long>(r.total_peak_bytes));
    out << line;
  }
  return out.str();
}

}  // namespace edgetsn
