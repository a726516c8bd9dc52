#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "edgetsn/sampling.hpp"
#include "edgetsn/train.hpp"

namespace edgetsn {

// Generated stand-in for an action dataset. Motion classes move a smoothly
// textured grey square right, left, down or up at `speed` px/frame over a
// static noisy background, wrapping at the borders; its start position is
// uniform, so a single frame says nothing about the direction. Optional
// appearance classes hold a red or a blue square still.
struct SyntheticConfig {
  std::size_t videos_per_class = 40;
  std::size_t frames = 30;
  std::size_t size = 32;
  std::size_t square = 12;
  std::size_t speed = 3;
  bool appearance_classes = false;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMotionClasses = 4;

std::vector<std::string> synthetic_class_names(bool appearance_classes);
bool is_motion_class(std::size_t label) noexcept;

VideoClip synthetic_clip(std::size_t label, std::uint64_t seed, const SyntheticConfig& config);

// videos_per_class clips of every class, interleaved by class. Clip i of
// class c uses a seed derived from (config.seed, c, i).
std::vector<LabeledClip> synthetic_dataset(const SyntheticConfig& config);

}  // namespace edgetsn
