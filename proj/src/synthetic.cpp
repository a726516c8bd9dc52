#include "edgetsn/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "edgetsn/error.hpp"

namespace edgetsn {

std::vector<std::string> synthetic_class_names(bool appearance_classes) {
  std::vector<std::string> names{"right", "left", "down", "up"};
  if (appearance_classes) {
    names.emplace_back("still_red");
    names.emplace_back("still_blue");
  }
  return names;
}

bool is_motion_class(std::size_t label) noexcept { return label < kMotionClasses; }

VideoClip synthetic_clip(std::size_t label, std::uint64_t seed, const SyntheticConfig& config) {
  const std::size_t classes = config.appearance_classes ? kMotionClasses + 2 : kMotionClasses;
  if (label >= classes) {
    throw ContractError("synthetic label " + std::to_string(label) + " outside " + std::to_string(classes));
  }
  if (config.square == 0 || config.square > config.size || config.frames == 0) {
    throw ContractError("synthetic square must fit the frame and clips need frames");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t S = config.size, Q = config.square;

  std::vector<double> background(S * S);
  for (double& b : background) {
    b = 0.45 + 0.1 * unit(rng);
  }
  // Sum of three random plane waves, mapped into [0.15, 0.85].
  double fx[3], fy[3], ph[3];
  for (int w = 0; w < 3; ++w) {
    const double freq = 0.35 + 0.45 * unit(rng);
    const double angle = 2.0 * std::numbers::pi * unit(rng);
    fx[w] = freq * std::cos(angle);
    fy[w] = freq * std::sin(angle);
    ph[w] = 2.0 * std::numbers::pi * unit(rng);
  }
  std::vector<double> tex(Q * Q);
  for (std::size_t y = 0; y < Q; ++y)
    for (std::size_t x = 0; x < Q; ++x) {
      double v = 0.0;
      for (int w = 0; w < 3; ++w) {
        v += std::sin(fx[w] * static_cast<double>(x) + fy[w] * static_cast<double>(y) + ph[w]);
      }
      tex[y * Q + x] = 0.5 + 0.35 * v / 3.0;
    }
  double tint[3] = {1.0, 1.0, 1.0};
  if (label == kMotionClasses) {
    tint[1] = tint[2] = 0.25;
  } else if (label == kMotionClasses + 1) {
    tint[0] = tint[1] = 0.25;
  }

  const std::size_t x0 = rng() % S;
  const std::size_t y0 = rng() % S;
  long dx = 0, dy = 0;
  const long v = static_cast<long>(config.speed);
  switch (label) {
    case 0: dx = v; break;
    case 1: dx = -v; break;
    case 2: dy = v; break;
    case 3: dy = -v; break;
    default: break;
  }

  VideoClip clip;
  clip.source_id = "synthetic/" + synthetic_class_names(config.appearance_classes)[label] + "/" + std::to_string(seed);
  const auto wrap = [S](long p) { return static_cast<std::size_t>(((p % static_cast<long>(S)) + static_cast<long>(S)) % static_cast<long>(S)); };
  for (std::size_t t = 0; t < config.frames; ++t) {
    Tensor f({3, S, S});
    for (std::size_t c = 0; c < 3; ++c) {
      std::copy(background.begin(), background.end(), f.ptr() + c * S * S);
    }
    const long ox = static_cast<long>(x0) + dx * static_cast<long>(t);
    const long oy = static_cast<long>(y0) + dy * static_cast<long>(t);
    for (std::size_t y = 0; y < Q; ++y)
      for (std::size_t x = 0; x < Q; ++x) {
        const std::size_t py = wrap(oy + static_cast<long>(y));
        const std::size_t px = wrap(ox + static_cast<long>(x));
        for (std::size_t c = 0; c < 3; ++c) {
          f[(c * S + py) * S + px] = tex[y * Q + x] * tint[c];
        }
      }
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

std::vector<LabeledClip> synthetic_dataset(const SyntheticConfig& config) {
  const std::size_t classes = config.appearance_classes ? kMotionClasses + 2 : kMotionClasses;
  std::vector<LabeledClip> data;
  data.reserve(classes * config.videos_per_class);
  for (std::size_t i = 0; i < config.videos_per_class; ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      data.push_back({synthetic_clip(c, mix_seed(mix_seed(config.seed, c), i), config), c});
    }
  }
  return data;
}

}  // namespace edgetsn
