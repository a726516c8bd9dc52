#pragma once

#include <cstddef>

#include "edgetsn/sampling.hpp"
#include "edgetsn/tensor.hpp"

namespace edgetsn {

// Per-pixel displacement between two frames in pixels/frame. Before
// normalisation vmax is 0; afterwards both components lie in [0, 1] with
// zero motion at exactly 0.5.
struct FlowField {
  Tensor vx;
  Tensor vy;
  std::size_t window_radius = 0;
  double vmax = 0.0;

  bool normalized() const noexcept { return vmax > 0.0; }
};

inline constexpr double kDefaultFlowVmax = 8.0;
inline constexpr std::size_t kDefaultFlowWindow = 3;
// Structure tensors whose smaller eigenvalue falls below this get zero flow.
inline constexpr double kSingularEigenvalue = 1e-6;

// Unweighted channel mean of a C x H x W frame, returned as H x W.
Tensor to_grayscale(const Tensor& frame);

// Windowed least-squares Lucas-Kanade on two H x W frames. Spatial
// gradients are central differences (one-sided at the border) of the mean
// of both frames; the temporal derivative is frame_b - frame_a. Windows are
// clipped at the image border.
FlowField lucas_kanade(const Tensor& frame_a, const Tensor& frame_b, std::size_t window_radius);

// Clamps each component to [-vmax, vmax] and maps it to (v + vmax) / (2 vmax).
FlowField normalize_flow(const FlowField& field, double vmax);

// T RGB frames -> T-1 two-channel (vx, vy) normalised flow frames.
VideoClip clip_to_flow(const VideoClip& clip, std::size_t window_radius, double vmax);

}  // namespace edgetsn
