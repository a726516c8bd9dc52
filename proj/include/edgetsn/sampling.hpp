#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edgetsn/backbone.hpp"
#include "edgetsn/modality.hpp"
#include "edgetsn/tensor.hpp"

namespace edgetsn {

// Ordered frames of one video, each C x H x W with values in [0, 1].
struct VideoClip {
  std::vector<Tensor> frames;
  Modality modality = Modality::rgb;
  double fps = 25.0;
  std::string source_id;

  std::size_t frame_count() const noexcept { return frames.size(); }
  const Shape& frame_shape() const;
  // Throws ContractError on mixed shapes, wrong channel count or values
  // outside [0, 1].
  void validate() const;
};

// K half-open [begin, end) frame intervals partitioning [0, T).
struct SegmentPlan {
  std::size_t frame_count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> segments;

  std::size_t k() const noexcept { return segments.size(); }
};

// The first T mod K segments get the extra frame.
SegmentPlan plan_segments(std::size_t frame_count, std::size_t k);

// One uniformly drawn index per segment.
std::vector<std::size_t> training_indices(const SegmentPlan& plan, std::uint64_t seed);
// The centre frame floor((lo + hi - 1) / 2) of each of K segments.
std::vector<std::size_t> testing_indices(std::size_t frame_count, std::size_t k);

enum class CropStrategy { center1, tencrop, random10, random1 };

std::string_view to_string(CropStrategy s) noexcept;
CropStrategy parse_crop_strategy(std::string_view s);
std::size_t crop_count(CropStrategy s) noexcept;

struct CropDescriptor {
  CropStrategy strategy = CropStrategy::center1;
  // 0 means "use the full frame".
  std::size_t height = 0;
  std::size_t width = 0;
  std::uint64_t seed = 0;
};

// Crops the trailing two (spatial) axes of `frame`.
//   center1  - one centred window
//   tencrop  - TL, TR, BL, BR, centre, then the horizontal mirror of each
//   random10 - ten seeded random windows
//   random1  - one seeded random window
std::vector<Tensor> crop(const Tensor& frame, CropStrategy strategy, std::size_t out_h, std::size_t out_w,
                         std::uint64_t seed = 0);

Tensor mirror_horizontal(const Tensor& t);

// Builds the backbone input starting at frame `index`: 2d specs stack
// spec.stack_depth frames on the channel axis, 3d specs put `temporal_frames`
// frames on a time axis. Indices past the end repeat the last frame.
Tensor make_snippet(const VideoClip& clip, std::size_t index, const BackboneSpec& spec,
                    std::size_t temporal_frames = 1);

struct SnippetBatch {
  std::vector<Tensor> snippets;
  std::vector<std::size_t> frame_indices;
  std::size_t label = 0;
  CropDescriptor crop;
};

// Raw single-frame snippets (no stacking, no crop).
SnippetBatch sample_training(const VideoClip& clip, const SegmentPlan& plan, std::uint64_t seed);
SnippetBatch sample_testing(const VideoClip& clip, std::size_t k);

}  // namespace edgetsn
