#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "edgetsn/backbone.hpp"
#include "edgetsn/optimizer.hpp"
#include "edgetsn/sampling.hpp"
#include "edgetsn/tsn.hpp"

namespace edgetsn {

struct LabeledClip {
  VideoClip clip;
  std::size_t label = 0;
};

struct TrainConfig {
  std::size_t k = 3;
  ConsensusSpec consensus;
  OptimizerConfig optimizer;
  std::size_t epochs = 1;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  // Random training crop; 0 keeps the full frame.
  std::size_t crop_height = 0;
  std::size_t crop_width = 0;
  // Frames per snippet for 3d backbones.
  std::size_t temporal_frames = 1;
  // When false, wall_ms is recorded as 0 so logs compare byte for byte.
  bool record_wall_time = false;

  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double train_top1 = 0.0;
  std::size_t videos = 0;
  std::size_t steps = 0;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  BackboneWeights weights;
  std::vector<EpochMetrics> epochs;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Minibatch training of one stream. Gradients are averaged over the videos of
// a minibatch before each optimizer step; the order of videos is reshuffled
// every epoch from `seed`, so equal seeds reproduce the same weights bit for bit.
TrainResult train(const std::vector<LabeledClip>& data, const BackboneSpec& spec, const BackboneWeights& init,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// The K snippets drawn for one training visit of a clip.
LabeledSample training_sample(const LabeledClip& example, const BackboneSpec& spec, const TrainConfig& config,
                              std::uint64_t seed);

// Stateless 64-bit mix used to derive per-visit seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace edgetsn
