#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "edgetsn/tensor.hpp"

namespace edgetsn {

// Binary PPM (P6, 3 channels) or PGM (P5, 1 channel). Values are scaled by
// 1 / maxval into [0, 1]; 16-bit samples are big-endian as the format
// requires. Returns C x H x W.
Tensor read_pnm(const std::filesystem::path& path);

// Writes P6 for 3-channel and P5 for 1-channel frames with maxval 255.
// Values are clamped to [0, 1] and rounded to the nearest level.
void write_pnm(const std::filesystem::path& path, const Tensor& frame);

// Raw planar video: "EDGV", u32 T, C, H, W (little-endian), f32 fps, then
// T*C*H*W bytes, one C x H x W plane set per frame.
struct RawVideo {
  std::uint32_t frames = 0;
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  float fps = 25.0f;
  std::vector<std::uint8_t> bytes;

  // Frame t scaled to [0, 1].
  Tensor frame(std::size_t t) const;
};

RawVideo read_raw_video(const std::filesystem::path& path);
void write_raw_video(const std::filesystem::path& path, const RawVideo& video);

// Quantises [0, 1] frames (all C x H x W, same shape) to a RawVideo.
RawVideo to_raw_video(const std::vector<Tensor>& frames, float fps);

}  // namespace edgetsn
