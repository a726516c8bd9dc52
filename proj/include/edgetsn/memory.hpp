#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgetsn/backbone.hpp"
#include "edgetsn/sampling.hpp"

namespace edgetsn {

struct InferenceProtocol {
  std::size_t k = 25;
  CropStrategy strategy = CropStrategy::center1;
  std::size_t batch_size = 1;
  std::size_t crop_height = 0;  // 0 = full frame
  std::size_t crop_width = 0;
  // Frames per snippet on the time axis (3d backbones only).
  std::size_t temporal_frames = 1;

  std::size_t crop_count() const noexcept { return edgetsn::crop_count(strategy); }
  void validate() const;
  bool operator==(const InferenceProtocol&) const = default;
};

struct LayerMemory {
  std::string name;
  LayerType type = LayerType::conv;
  Shape output_shape;
  std::uint64_t input_bytes = 0;   // per crop, per video
  std::uint64_t output_bytes = 0;  // per crop, per video
  std::uint64_t live_bytes = 0;    // whole protocol, while this layer runs

  bool operator==(const LayerMemory&) const = default;
};

struct MemoryReport {
  InferenceProtocol protocol;
  std::string architecture;
  Shape input_shape;  // one crop
  std::uint64_t parameter_bytes = 0;
  std::uint64_t peak_activation_bytes = 0;
  std::uint64_t total_peak_bytes = 0;
  std::size_t peak_layer = 0;
  std::vector<LayerMemory> layers;

  nlohmann::ordered_json to_json() const;
  static MemoryReport from_json(const nlohmann::json& j);
  bool operator==(const MemoryReport&) const = default;
};

// Symbolic activation accounting for a sequential executor: snippets run one
// after another, the crops of a snippet run as one batch, and each video of
// a batch is resident at once. An activation lives from the layer that
// produces it until the layer that consumes it, so a step holds its input and
// output. Frames are `channels x height x width` of the decoded video.
MemoryReport profile_inference(const BackboneSpec& spec, const InferenceProtocol& protocol, std::size_t frame_height,
                               std::size_t frame_width);

// Tensor high-water mark (bytes above the live set at entry) while `run`
// executes. Other threads must not allocate tensors meanwhile.
std::uint64_t measure_runtime_peak(const std::function<void()>& run);

std::string format_memory_table(const std::vector<MemoryReport>& reports,
                                const std::vector<double>& top1 = {});

}  // namespace edgetsn
