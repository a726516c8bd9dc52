#include "edgetsn/sampling.hpp"

#include <algorithm>
#include <random>

#include "edgetsn/error.hpp"

namespace edgetsn {

const Shape& VideoClip::frame_shape() const {
  if (frames.empty()) {
    throw ContractError("clip '" + source_id + "' has no frames");
  }
  return frames.front().shape();
}

void VideoClip::validate() const {
  const Shape& s = frame_shape();
  if (s.size() != 3 || s[0] != modality_channels(modality)) {
    throw ContractError("clip '" + source_id + "' frames are " + shape_to_string(s) + ", expected " +
                        std::to_string(modality_channels(modality)) + " x H x W");
  }
  for (const Tensor& f : frames) {
    if (f.shape() != s) {
      throw ContractError("clip '" + source_id + "' mixes frame shapes");
    }
    for (const double v : f.data()) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ContractError("clip '" + source_id + "' has values outside [0, 1]");
      }
    }
  }
}

SegmentPlan plan_segments(std::size_t frame_count, std::size_t k) {
  if (k == 0) {
    throw ContractError("segment count must be >= 1");
  }
  if (frame_count < k) {
    throw InsufficientFramesError("cannot split " + std::to_string(frame_count) + " frames into " +
                                  std::to_string(k) + " segments");
  }
  SegmentPlan plan;
  plan.frame_count = frame_count;
  const std::size_t base = frame_count / k;
  const std::size_t extra = frame_count % k;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    plan.segments.emplace_back(begin, begin + len);
    begin += len;
  }
  return plan;
}

std::vector<std::size_t> training_indices(const SegmentPlan& plan, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx;
  idx.reserve(plan.k());
  for (const auto& [lo, hi] : plan.segments) {
    idx.push_back(std::uniform_int_distribution<std::size_t>(lo, hi - 1)(rng));
  }
  return idx;
}

std::vector<std::size_t> testing_indices(std::size_t frame_count, std::size_t k) {
  const SegmentPlan plan = plan_segments(frame_count, k);
  std::vector<std::size_t> idx;
  idx.reserve(k);
  for (const auto& [lo, hi] : plan.segments) {
    idx.push_back((lo + hi - 1) / 2);
  }
  return idx;
}

std::string_view to_string(CropStrategy s) noexcept {
  switch (s) {
    case CropStrategy::center1:
      return "center1";
    case CropStrategy::tencrop:
      return "tencrop";
    case CropStrategy::random10:
      return "random10";
    case CropStrategy::random1:
      return "random1";
  }
  return "?";
}

CropStrategy parse_crop_strategy(std::string_view s) {
  for (const CropStrategy c : {CropStrategy::center1, CropStrategy::tencrop, CropStrategy::random10,
                               CropStrategy::random1}) {
    if (to_string(c) == s) {
      return c;
    }
  }
  throw ContractError("unknown crop strategy '" + std::string(s) + "'");
}

std::size_t crop_count(CropStrategy s) noexcept {
  return (s == CropStrategy::tencrop || s == CropStrategy::random10) ? 10 : 1;
}

namespace {

Tensor window(const Tensor& t, std::size_t y0, std::size_t x0, std::size_t out_h, std::size_t out_w) {
  const std::size_t r = t.rank();
  const std::size_t H = t.dim(r - 2);
  const std::size_t W = t.dim(r - 1);
  Shape s = t.shape();
  s[r - 2] = out_h;
  s[r - 1] = out_w;
  Tensor out(s);
  const std::size_t planes = t.size() / (H * W);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t y = 0; y < out_h; ++y) {
      const double* src = t.ptr() + p * H * W + (y0 + y) * W + x0;
      std::copy_n(src, out_w, out.ptr() + (p * out_h + y) * out_w);
    }
  }
  return out;
}

}  // namespace

Tensor mirror_horizontal(const Tensor& t) {
  const std::size_t W = t.dim(t.rank() - 1);
  Tensor out(t.shape());
  for (std::size_t row = 0; row < t.size() / W; ++row) {
    const double* src = t.ptr() + row * W;
    double* dst = out.ptr() + row * W;
    for (std::size_t x = 0; x < W; ++x) {
      dst[x] = src[W - 1 - x];
    }
  }
  return out;
}

std::vector<Tensor> crop(const Tensor& frame, CropStrategy strategy, std::size_t out_h, std::size_t out_w,
                         std::uint64_t seed) {
  if (frame.rank() < 2) {
    throw ShapeError("crop needs at least two spatial axes");
  }
  const std::size_t H = frame.dim(frame.rank() - 2);
  const std::size_t W = frame.dim(frame.rank() - 1);
  if (out_h == 0 || out_w == 0 || out_h > H || out_w > W) {
    throw ContractError("crop " + std::to_string(out_h) + "x" + std::to_string(out_w) + " does not fit frame " +
                        std::to_string(H) + "x" + std::to_string(W));
  }
  const std::size_t cy = (H - out_h) / 2;
  const std::size_t cx = (W - out_w) / 2;
  std::vector<Tensor> out;
  switch (strategy) {
    case CropStrategy::center1:
      out.push_back(window(frame, cy, cx, out_h, out_w));
      break;
    case CropStrategy::tencrop: {
      const std::pair<std::size_t, std::size_t> corners[5] = {
          {0, 0}, {0, W - out_w}, {H - out_h, 0}, {H - out_h, W - out_w}, {cy, cx}};
      for (const auto& [y, x] : corners) {
        out.push_back(window(frame, y, x, out_h, out_w));
      }
      for (std::size_t i = 0; i < 5; ++i) {
        out.push_back(mirror_horizontal(out[i]));
      }
      break;
    }
    case CropStrategy::random10:
    case CropStrategy::random1: {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<std::size_t> dy(0, H - out_h);
      std::uniform_int_distribution<std::size_t> dx(0, W - out_w);
      for (std::size_t i = 0; i < crop_count(strategy); ++i) {
        const std::size_t y = dy(rng);
        const std::size_t x = dx(rng);
        out.push_back(window(frame, y, x, out_h, out_w));
      }
      break;
    }
  }
  return out;
}

Tensor make_snippet(const VideoClip& clip, std::size_t index, const BackboneSpec& spec, std::size_t temporal_frames) {
  const std::size_t T = clip.frame_count();
  if (index >= T) {
    throw ContractError("snippet start " + std::to_string(index) + " outside clip of " + std::to_string(T) +
                        " frames");
  }
  const Shape& fs = clip.frame_shape();
  const bool is3d = spec.dims == Dimensionality::d3;
  const std::size_t depth = is3d ? temporal_frames : spec.stack_depth;
  if (depth == 0) {
    throw ContractError("snippet needs at least one frame");
  }
  if (depth == 1 && !is3d) {
    return clip.frames[index];
  }
  const std::size_t C = fs[0];
  const std::size_t plane = fs[1] * fs[2];
  Tensor out(is3d ? Shape{C, depth, fs[1], fs[2]} : Shape{C * depth, fs[1], fs[2]});
  for (std::size_t d = 0; d < depth; ++d) {
    const Tensor& f = clip.frames[std::min(index + d, T - 1)];
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t dst = is3d ? (c * depth + d) * plane : (d * C + c) * plane;
      std::copy_n(f.ptr() + c * plane, plane, out.ptr() + dst);
    }
  }
  return out;
}

SnippetBatch sample_training(const VideoClip& clip, const SegmentPlan& plan, std::uint64_t seed) {
  if (plan.frame_count != clip.frame_count()) {
    throw ContractError("segment plan covers " + std::to_string(plan.frame_count) + " frames but clip has " +
                        std::to_string(clip.frame_count()));
  }
  SnippetBatch b;
  b.frame_indices = training_indices(plan, seed);
  for (const std::size_t i : b.frame_indices) {
    b.snippets.push_back(clip.frames[i]);
  }
  return b;
}

SnippetBatch sample_testing(const VideoClip& clip, std::size_t k) {
  SnippetBatch b;
  b.frame_indices = testing_indices(clip.frame_count(), k);
  for (const std::size_t i : b.frame_indices) {
    b.snippets.push_back(clip.frames[i]);
  }
  return b;
}

}  // namespace edgetsn
